"""Steady-state genetic algorithm over Gray-coded genotypes.

Each genotype holds ``bits`` bits per parameter followed by two selector bits
that choose the operator applied when the individual is picked as first
parent: 00 one-point crossover, 01 point mutation, 10 uniform crossover,
11 internal crossover. Selector bits are mutated like any other bit.

Parameter order in the genotype::

    w      C*(P+1)   per output: bias, then one weight per kernel
    xi     P
    omega  P*N       kernel-major
    lambda D
    eta    D*N       basis-function-major
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import DatasetStats, RawDataset
from .eigen import EigenError, ground_state, solve
from .matrix import MatrixError, StateBasis, assemble, energy_breakdown
from .network import NetworkError, NetworkParams, error_percent, make_potential

log = logging.getLogger(__name__)

OPERATORS = ("crossover", "mutation", "uniform", "internal")


class GAError(RuntimeError):
    pass


# ---------------------------------------------------------------- gray codes

def gray_encode(bits) -> np.ndarray:
    """Binary to Gray, most significant bit first."""
    b = np.asarray(bits, dtype=np.uint8)
    if b.size == 0:
        raise ValueError("empty bit string")
    g = b.copy()
    g[..., 1:] ^= b[..., :-1]
    return g


def gray_decode(bits) -> np.ndarray:
    """Gray to binary: each binary bit is the XOR of all Gray bits up to it."""
    g = np.asarray(bits, dtype=np.uint8)
    if g.size == 0:
        raise ValueError("empty bit string")
    return np.bitwise_xor.accumulate(g, axis=-1)


def int_to_bits(k, width: int) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((k[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    width = b.shape[-1]
    return b @ (np.int64(1) << np.arange(width - 1, -1, -1, dtype=np.int64))


# ---------------------------------------------------------------- layout

@dataclass
class ParamRanges:
    """Decoding range per parameter group.

    The basis exponent starts at 0.1 rather than 0: as lambda -> 0 the basis
    functions spread without bound and E -> 0 whatever the network does, so
    an unbounded-below exponent makes the energy useless as a fitness.
    """

    w: tuple = (-4.0, 4.0)
    xi: tuple = (0.0, 4.0)
    omega: tuple = (-1.0, 1.0)
    lam: tuple = (0.1, 4.0)
    eta: tuple = (-1.0, 1.0)

    def __post_init__(self):
        for name in ("w", "xi", "omega", "lam", "eta"):
            lo, hi = map(float, getattr(self, name))
            if not lo < hi:
                raise ValueError(f"range for {name} needs lo < hi, got ({lo}, {hi})")
            setattr(self, name, (lo, hi))

    def to_dict(self) -> dict:
        return {"w": list(self.w), "xi": list(self.xi), "omega": list(self.omega),
                "lambda": list(self.lam), "eta": list(self.eta)}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamRanges":
        dflt = cls()
        return cls(d.get("w", dflt.w), d.get("xi", dflt.xi), d.get("omega", dflt.omega),
                   d.get("lambda", dflt.lam), d.get("eta", dflt.eta))


@dataclass
class Layout:
    n_inputs: int
    n_outputs: int
    n_kernels: int
    n_basis: int
    bits: int = 20
    ranges: ParamRanges = field(default_factory=ParamRanges)

    def __post_init__(self):
        if min(self.n_inputs, self.n_outputs, self.n_kernels, self.n_basis) < 1:
            raise ValueError("all dimensions must be positive")
        if not 8 <= self.bits <= 62:
            raise ValueError("bits per parameter must lie in [8, 62]")
        N, C, P, D = self.n_inputs, self.n_outputs, self.n_kernels, self.n_basis
        sizes = [("w", C * (P + 1)), ("xi", P), ("omega", P * N), ("lam", D), ("eta", D * N)]
        self.slices = {}
        start = 0
        lo, hi = [], []
        for name, size in sizes:
            self.slices[name] = slice(start, start + size)
            r = getattr(self.ranges, name)
            lo += [r[0]] * size
            hi += [r[1]] * size
            start += size
        self.lo = np.array(lo)
        self.hi = np.array(hi)

    @property
    def n_params(self) -> int:
        return self.lo.size

    @property
    def length(self) -> int:
        return self.n_params * self.bits + 2

    @property
    def levels(self) -> int:
        return (1 << self.bits) - 1

    def to_dict(self) -> dict:
        return {"n_inputs": self.n_inputs, "n_outputs": self.n_outputs,
                "n_kernels": self.n_kernels, "n_basis": self.n_basis,
                "bits": self.bits, "ranges": self.ranges.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Layout":
        return cls(d["n_inputs"], d["n_outputs"], d["n_kernels"], d["n_basis"],
                   d.get("bits", 20), ParamRanges.from_dict(d.get("ranges", {})))


def decode_vector(bits, layout: Layout) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size != layout.length:
        raise ValueError(f"genotype has {bits.size} bits, layout needs {layout.length}")
    fields = bits[:-2].reshape(layout.n_params, layout.bits)
    u = bits_to_int(gray_decode(fields))
    return layout.lo + u * ((layout.hi - layout.lo) / layout.levels)


def encode_vector(values, layout: Layout, selector: int = 0) -> np.ndarray:
    """Nearest grid point per parameter, clipped into range."""
    v = np.asarray(values, dtype=float)
    if v.size != layout.n_params:
        raise ValueError(f"expected {layout.n_params} parameters, got {v.size}")
    u = np.rint((v - layout.lo) / (layout.hi - layout.lo) * layout.levels)
    u = np.clip(u, 0, layout.levels).astype(np.int64)
    fields = gray_encode(int_to_bits(u, layout.bits)).ravel()
    return np.concatenate([fields, int_to_bits(selector, 2)]).astype(np.uint8)


def split_vector(v, layout: Layout):
    N, C, P, D = layout.n_inputs, layout.n_outputs, layout.n_kernels, layout.n_basis
    s = layout.slices
    net = NetworkParams(v[s["w"]].reshape(C, P + 1), v[s["xi"]], v[s["omega"]].reshape(P, N))
    basis = StateBasis(v[s["lam"]], v[s["eta"]].reshape(D, N))
    return net, basis


def join_params(net: NetworkParams, basis: StateBasis) -> np.ndarray:
    return np.concatenate([net.w.ravel(), net.xi, net.omega.ravel(), basis.lam, basis.eta.ravel()])


def decode_params(bits, layout: Layout):
    """Genotype to (NetworkParams, StateBasis).

    With a basis-exponent range starting at 0, the zero grid point is not a
    legal basis function; it surfaces as MatrixError.
    """
    return split_vector(decode_vector(bits, layout), layout)


def encode_params(net: NetworkParams, basis: StateBasis, layout: Layout, selector: int = 0):
    return encode_vector(join_params(net, basis), layout, selector)


def selector_code(bits) -> int:
    return int(bits[-2]) * 2 + int(bits[-1])


# ---------------------------------------------------------------- evaluation

@dataclass
class Individual:
    bits: np.ndarray
    energy: float = np.inf
    shared: float = np.inf
    error: float = np.inf
    origin: str = "init"
    c: np.ndarray | None = None
    failure: str | None = None

    @property
    def operator(self) -> str:
        return OPERATORS[selector_code(self.bits)]


def solve_energy(net: NetworkParams, basis: StateBasis, stats: DatasetStats, pot):
    """Ground state of the secular system: (E0, c, EnergyBreakdown)."""
    pair = assemble(basis, net, stats, pot)
    e0, c = ground_state(solve(pair))
    return e0, c, energy_breakdown(c, pair)


def evaluate(bits, layout: Layout, data: RawDataset, stats: DatasetStats) -> Individual:
    """Decode and score one genotype.

    Any numerical failure yields an infinite energy so the run continues.
    """
    ind = Individual(np.asarray(bits, dtype=np.uint8).copy())
    try:
        net, basis = decode_params(ind.bits, layout)
        ind.error = float(np.mean(error_percent(net, data)))
        pot = make_potential(net, data, stats)
        with np.errstate(over="raise", divide="raise", invalid="raise"):
            e0, c, _ = solve_energy(net, basis, stats, pot)
        if not np.isfinite(e0):
            raise EigenError("non-finite ground-state energy")
        ind.energy, ind.c = e0, c
    except (MatrixError, EigenError, NetworkError, FloatingPointError,
            np.linalg.LinAlgError, ValueError) as exc:
        ind.energy = np.inf
        ind.failure = f"{type(exc).__name__}: {exc}"
    return ind


# ---------------------------------------------------------------- sharing

def hamming(a, pop_bits) -> np.ndarray:
    """Normalized Hamming distance of ``a`` to every row of ``pop_bits``."""
    return np.count_nonzero(pop_bits != a, axis=-1) / a.size


def sharing_sums(dist: np.ndarray, radius: float, upsilon: float = 1.0) -> np.ndarray:
    """Row sums of the triangular sharing function; the diagonal contributes 1."""
    if radius < 0:
        raise ValueError("sharing radius must be non-negative")
    if radius == 0:
        return np.ones(dist.shape[0])
    phi = np.where(dist < radius, 1.0 - (dist / radius) ** upsilon, 0.0)
    np.fill_diagonal(phi, 1.0)
    return phi.sum(axis=1)


def share_fitness(population: list, radius: float, upsilon: float = 1.0,
                  dist: np.ndarray | None = None) -> list:
    """Set ``shared = energy * sum(phi)`` on every individual, in place."""
    if dist is None:
        bits = np.stack([ind.bits for ind in population])
        dist = np.stack([hamming(b, bits) for b in bits])
    sums = sharing_sums(dist, radius, upsilon)
    for ind, s in zip(population, sums):
        ind.shared = ind.energy * s
    return population


# ---------------------------------------------------------------- operators

def one_point_crossover(a, b, rng):
    cut = int(rng.integers(1, a.size))
    return (np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]]))


def uniform_crossover(a, b, rng):
    mask = rng.random(a.size) < 0.5
    return np.where(mask, a, b), np.where(mask, b, a)


def point_mutation(a, p_mut: float, rng):
    flips = rng.random(a.size) < p_mut
    return a ^ flips.astype(np.uint8)


def internal_crossover(a, rng):
    """Swap two random, equal-length, non-overlapping segments of one parent."""
    n = a.size
    seg = int(rng.integers(1, n // 2 + 1))
    # place two segments inside n with a free gap split around them
    slack = n - 2 * seg
    cuts = np.sort(rng.integers(0, slack + 1, size=2))
    i = int(cuts[0])
    j = int(cuts[1]) + seg
    child = a.copy()
    child[i:i + seg], child[j:j + seg] = a[j:j + seg], a[i:i + seg]
    return child


# ---------------------------------------------------------------- island

@dataclass
class IslandConfig:
    population: int = 250
    p_mut: float | None = None   # drawn from U[0, 0.01] per run when None
    upsilon: float = 1.0
    cycles: int = 20000
    radius: float = 0.0
    exchange_period: int = 100
    log_interval: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be at least 4")
        if not 0.0 <= self.radius <= 1.0:
            raise ValueError("sharing radius must lie in [0, 1]")
        if self.p_mut is not None and not 0.0 <= self.p_mut <= 0.01:
            raise ValueError("mutation probability must lie in [0, 0.01]")
        if self.cycles < 0 or self.exchange_period < 1 or self.log_interval < 1:
            raise ValueError("cycles, exchange period and log interval must be positive")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class Island:
    def __init__(self, index: int, config: IslandConfig, layout: Layout,
                 data: RawDataset, stats: DatasetStats):
        self.index = index
        self.config = config
        self.layout = layout
        self.data = data
        self.stats = stats
        self.rng = np.random.default_rng([config.seed, index])
        self.p_mut = config.p_mut if config.p_mut is not None else float(self.rng.uniform(0, 0.01))
        self.cycle = 0
        self.evaluations = 0
        self.history: list[dict] = []
        self.failed: str | None = None
        self.population = [self._eval(self.rng.integers(0, 2, layout.length, dtype=np.uint8))
                           for _ in range(config.population)]
        bits = self.bits_matrix()
        self.dist = np.stack([hamming(b, bits) for b in bits])
        self._reshare()
        self.initial_best_error = min(ind.error for ind in self.population)
        self._log()

    def _eval(self, bits) -> Individual:
        self.evaluations += 1
        return evaluate(bits, self.layout, self.data, self.stats)

    def bits_matrix(self) -> np.ndarray:
        return np.stack([ind.bits for ind in self.population])

    def _reshare(self):
        share_fitness(self.population, self.config.radius, self.config.upsilon, self.dist)

    def elite_index(self) -> int:
        return int(np.argmin([ind.energy for ind in self.population]))

    @property
    def best(self) -> Individual:
        return self.population[self.elite_index()]

    def _tournament(self) -> Individual:
        i, j = self.rng.integers(0, len(self.population), size=2)
        a, b = self.population[i], self.population[j]
        return a if (a.shared, i) <= (b.shared, j) else b

    def replace_worst(self, child: Individual):
        """Put ``child`` in place of the worst shared energy; the elite is kept."""
        shared = np.array([ind.shared for ind in self.population])
        shared[np.isnan(shared)] = np.inf
        shared[self.elite_index()] = -np.inf
        k = int(np.argmax(shared))
        self.population[k] = child
        row = hamming(child.bits, self.bits_matrix())
        self.dist[k, :] = row
        self.dist[:, k] = row
        self._reshare()

    def step(self):
        parent = self._tournament()
        op = parent.operator
        rng = self.rng
        if op == "crossover":
            kids = one_point_crossover(parent.bits, self._tournament().bits, rng)
        elif op == "uniform":
            kids = uniform_crossover(parent.bits, self._tournament().bits, rng)
        elif op == "mutation":
            kids = (point_mutation(parent.bits, self.p_mut, rng),)
        else:
            kids = (internal_crossover(parent.bits, rng),)
        for bits in kids:
            child = self._eval(bits)
            child.origin = op
            self.replace_worst(child)
        self.cycle += 1
        if self.cycle % self.config.log_interval == 0:
            self._log()

    def advance(self, cycles: int):
        for _ in range(cycles):
            self.step()
        return self

    def _log(self):
        codes = np.array([selector_code(ind.bits) for ind in self.population])
        frac = np.bincount(codes, minlength=4) / codes.size
        shared = np.array([ind.shared for ind in self.population])
        finite = shared[np.isfinite(shared)]
        best = self.best
        self.history.append({
            "island": self.index,
            "step": self.cycle,
            "evaluations": self.evaluations,
            "best_E": _num(best.energy),
            "mean_E_shared": _num(finite.mean()) if finite.size else None,
            "best_Er": _num(best.error),
            "min_Er": _num(min(ind.error for ind in self.population)),
            "operator_fractions": dict(zip(OPERATORS, frac.tolist())),
        })

    def receive(self, migrant: Individual):
        if any(np.array_equal(migrant.bits, ind.bits) for ind in self.population):
            return
        m = Individual(migrant.bits.copy(), migrant.energy, np.inf, migrant.error,
                       "migrant", None if migrant.c is None else migrant.c.copy())
        self.replace_worst(m)


def _num(x):
    x = float(x)
    return x if np.isfinite(x) else None


def sharing_schedule(n_islands: int) -> list:
    """Sharing radii 0, 0.1, 0.2, ... one per island."""
    return [i / 10 for i in range(n_islands)]


def _advance(island: Island, cycles: int):
    return island.advance(cycles)


@dataclass
class RunResult:
    best: Individual
    best_island: int
    islands: list
    history: list
    failures: dict

    @property
    def initial_best_error(self) -> float:
        return min(isl.initial_best_error for isl in self.islands if isl.failed is None)


def run_islands(configs: list, layout: Layout, data: RawDataset, stats: DatasetStats,
                workers: int = 1) -> RunResult:
    """Run islands side by side with periodic elite migration.

    Every exchange period (taken from the first config) the global best is
    copied into every other surviving island. An island that raises is
    dropped and the run continues with the rest.
    """
    if not configs:
        raise GAError("need at least one island")
    islands, failures = [], {}
    for i, cfg in enumerate(configs):
        try:
            islands.append(Island(i, cfg, layout, data, stats))
        except Exception as exc:          # noqa: BLE001 - isolate the island
            failures[i] = f"{type(exc).__name__}: {exc}"
            log.warning("island %d failed during initialization: %s", i, exc)
    period = configs[0].exchange_period
    total = max(cfg.cycles for cfg in configs)
    pool = ProcessPoolExecutor(workers) if workers > 1 and len(islands) > 1 else None
    try:
        done = 0
        while done < total and islands:
            chunk = min(period, total - done)
            todo = [(isl, min(chunk, isl.config.cycles - isl.cycle)) for isl in islands]
            if pool is None:
                results = []
                for isl, n in todo:
                    try:
                        results.append(isl.advance(n))
                    except Exception as exc:  # noqa: BLE001
                        results.append(exc)
            else:
                futs = [pool.submit(_advance, isl, n) for isl, n in todo]
                results = []
                for f in futs:
                    try:
                        results.append(f.result())
                    except Exception as exc:  # noqa: BLE001
                        results.append(exc)
            survivors = []
            for (isl, _), res in zip(todo, results):
                if isinstance(res, Exception):
                    failures[isl.index] = f"{type(res).__name__}: {res}"
                    log.warning("island %d failed: %s", isl.index, res)
                else:
                    survivors.append(res)
            islands = survivors
            done += chunk
            if len(islands) > 1:
                src = min(islands, key=lambda s: (s.best.energy, s.index))
                for isl in islands:
                    if isl is not src:
                        isl.receive(src.best)
    finally:
        if pool is not None:
            pool.shutdown()
    if not islands:
        raise GAError(f"all islands failed: {failures}")
    src = min(islands, key=lambda s: (s.best.energy, s.index))
    history = sorted((rec for isl in islands for rec in isl.history),
                     key=lambda r: (r["step"], r["island"]))
    return RunResult(src.best, src.index, islands, history, failures)


def global_series(history: list):
    """Per logged step, the best energy over islands and the error of that individual."""
    steps = sorted({r["step"] for r in history})
    best_e, best_er = [], []
    for s in steps:
        recs = [r for r in history if r["step"] == s and r["best_E"] is not None]
        if not recs:
            best_e.append(np.inf)
            best_er.append(np.inf)
            continue
        r = min(recs, key=lambda r: (r["best_E"], r["island"]))
        best_e.append(r["best_E"])
        best_er.append(r["best_Er"] if r["best_Er"] is not None else np.inf)
    return np.array(steps), np.array(best_e), np.array(best_er)
