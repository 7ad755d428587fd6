"""Solution bundle, per-partition reports and plot-ready data files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .data import DatasetStats, NormParams, RawDataset, compute_stats
from .eigen import EigenError
from .ga import Layout, solve_energy
from .matrix import MatrixError, StateBasis, assemble, energy_breakdown, overlap_matrix
from .metrics import info_report, uncertainty_check
from .network import NetworkParams, error_percent, eval_network, make_potential

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


@dataclass
class Solution:
    layout: Layout
    net: NetworkParams
    basis: StateBasis
    c: np.ndarray
    normalization: NormParams | None = None
    train_fraction: float = 0.75
    split_seed: int = 0
    reports: dict | None = None
    run: dict | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "eann-solution",
            "layout": self.layout.to_dict(),
            "network": self.net.to_dict(),
            "basis": self.basis.to_dict(),
            "c": np.asarray(self.c).tolist(),
            "normalization": None if self.normalization is None else self.normalization.to_dict(),
            "split": {"train_fraction": self.train_fraction, "seed": self.split_seed},
            "reports": self.reports or {},
            "run": self.run or {},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        if not isinstance(d, dict):
            raise SchemaError("solution must be a JSON object")
        if d.get("kind") != "eann-solution":
            raise SchemaError("not a solution file (kind != 'eann-solution')")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema_version {d.get('schema_version')!r}")
        for key in ("layout", "network", "basis", "c"):
            if key not in d:
                raise SchemaError(f"solution is missing '{key}'")
        try:
            layout = Layout.from_dict(d["layout"])
            net = NetworkParams.from_dict(d["network"])
            basis = StateBasis.from_dict(d["basis"])
            c = np.asarray(d["c"], dtype=float)
            norm = d.get("normalization")
            split = d.get("split", {})
            sol = cls(layout, net, basis, c,
                      None if norm is None else NormParams.from_dict(norm),
                      float(split.get("train_fraction", 0.75)), int(split.get("seed", 0)),
                      d.get("reports"), d.get("run"))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed solution: {exc}") from None
        dims = (net.n_inputs, net.n_outputs, net.n_kernels, basis.size)
        want = (layout.n_inputs, layout.n_outputs, layout.n_kernels, layout.n_basis)
        if dims != want or c.shape != (basis.size,) or basis.n_inputs != net.n_inputs:
            raise SchemaError(f"parameter shapes {dims} / c {c.shape} disagree with layout {want}")
        return sol


def load_solution(path) -> Solution:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return Solution.from_dict(d)


def _round(x, digits: int = 12):
    """Floats rounded to a fixed number of significant digits for stable output."""
    if isinstance(x, dict):
        return {k: _round(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v, digits) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not np.isfinite(x):
            return None
        return float(f"{x:.{digits}g}")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _round(x.tolist(), digits)
    return x


def partition_report(net: NetworkParams, basis: StateBasis, c, d: RawDataset,
                     stats: DatasetStats | None = None) -> dict:
    """Energy, error and information figures on one partition.

    The ground state is solved again for this partition's potential; the
    stored ``c`` is reported alongside.
    """
    stats = compute_stats(d) if stats is None else stats
    pot = make_potential(net, d, stats)
    out = {
        "records": d.n_records,
        "rho": stats.rho, "theta": stats.theta,
        "chi": pot.chi, "alpha": pot.alpha, "beta": pot.beta, "gamma": pot.gamma,
        "E_r": error_percent(net, d),
    }
    try:
        E, c0, eb = solve_energy(net, basis, stats, pot)
        out.update({"E": E, "T": eb.T, "V": eb.V, "ground_state": c0})
        info = info_report(eb.V, net.n_inputs)
        out["info"] = info.to_dict()
        out["W"] = info.W
        out["complexity"] = info.complexity
    except (MatrixError, EigenError) as exc:
        out.update({"E": None, "failure": f"{type(exc).__name__}: {exc}"})
        c0 = None
    pair = assemble(basis, net, stats, pot)
    c = np.asarray(c, dtype=float)
    eb_stored = energy_breakdown(c, pair)
    out["stored_c"] = {"E": eb_stored.E, "T": eb_stored.T, "V": eb_stored.V,
                       "cSc": float(c @ overlap_matrix(basis) @ c)}
    if net.n_inputs == 1 and c0 is not None:
        out["uncertainty"] = uncertainty_check(basis, c0, float(stats.sigma[0]))
    else:
        out["uncertainty"] = None
    return _round(out)


def build_report(sol: Solution, parts: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": "eann-report",
            "partitions": {name: partition_report(sol.net, sol.basis, sol.c, d)
                           for name, d in parts.items()}}


def dispersion_rows(net: NetworkParams, parts: dict, indices: dict):
    """(index, observed, computed, partition[, target]) per record."""
    rows = []
    for name, d in parts.items():
        y = eval_network(d.x, net)
        idx = indices.get(name, np.arange(d.n_records))
        for r in range(d.n_records):
            for k in range(d.n_targets):
                row = [int(idx[r]), float(d.t[r, k]), float(y[r, k]), name]
                if d.n_targets > 1:
                    row.append(k)
                rows.append(row)
    return rows


def write_dispersion(path, net: NetworkParams, parts: dict, indices: dict) -> int:
    rows = dispersion_rows(net, parts, indices)
    multi = any(d.n_targets > 1 for d in parts.values())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "observed", "computed", "partition"] + (["target"] if multi else []))
        for row in rows:
            w.writerow([row[0], repr(row[1]), repr(row[2])] + row[3:])
    return len(rows)


def write_chi_table(path, table) -> None:
    x = np.asarray(table.x)
    n_cols = 1 if x.ndim == 1 else x.shape[1]
    names = ["x"] if n_cols == 1 else [f"x{i + 1}" for i in range(n_cols)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["chi", "masked"])
        for row in table.rows():
            w.writerow(row)


def write_history(path, history: list) -> None:
    with open(path, "w") as fh:
        for rec in history:
            fh.write(json.dumps({"schema_version": SCHEMA_VERSION, **_round(rec)},
                                sort_keys=True) + "\n")
