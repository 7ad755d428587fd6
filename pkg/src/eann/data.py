"""Dataset ingestion, min/max normalization, partitioning and summary statistics.

A dataset is a pair of matrices: ``x`` with one row per record and one column
per input feature, and ``t`` with one column per network output.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

# Normalization interval shared by features and targets.
RANGE_LO = -1.0
RANGE_HI = 1.0


class DatasetError(ValueError):
    """Malformed or degenerate input data."""


@dataclass
class RawDataset:
    x: np.ndarray
    t: np.ndarray
    feature_names: list[str] = field(default_factory=list)
    target_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.t = np.asarray(self.t, dtype=float)
        if self.t.ndim == 1:
            self.t = self.t[:, None]
        if self.x.shape[0] != self.t.shape[0]:
            raise DatasetError(
                f"x has {self.x.shape[0]} rows but t has {self.t.shape[0]}")
        if self.x.shape[0] < 2:
            raise DatasetError("dataset needs at least 2 records")
        if self.x.shape[1] < 1 or self.t.shape[1] < 1:
            raise DatasetError("dataset needs at least one feature and one target")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.t))):
            raise DatasetError("dataset contains non-finite entries")
        if not self.feature_names:
            self.feature_names = [f"x{i + 1}" for i in range(self.n_features)]
        if not self.target_names:
            self.target_names = [f"t{k + 1}" for k in range(self.n_targets)]

    @property
    def n_records(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    @property
    def n_targets(self) -> int:
        return self.t.shape[1]

    @property
    def column_names(self) -> list[str]:
        return list(self.feature_names) + list(self.target_names)

    def columns(self) -> np.ndarray:
        """All columns side by side, features first."""
        return np.hstack([self.x, self.t])

    def subset(self, rows) -> "RawDataset":
        rows = np.asarray(rows)
        return RawDataset(self.x[rows], self.t[rows],
                          list(self.feature_names), list(self.target_names))


@dataclass
class NormParams:
    """Per-column affine map ``z = scale * v + offset`` (features first)."""

    scale: np.ndarray
    offset: np.ndarray
    lo: float = RANGE_LO
    hi: float = RANGE_HI

    def __post_init__(self):
        self.scale = np.asarray(self.scale, dtype=float)
        self.offset = np.asarray(self.offset, dtype=float)
        if np.any(self.scale <= 0):
            raise DatasetError("normalization scale must be positive")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        return {"scale": self.scale.tolist(), "offset": self.offset.tolist(),
                "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "NormParams":
        return cls(np.array(d["scale"]), np.array(d["offset"]), d["lo"], d["hi"])


def _finite_or_none(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _float_array(values):
    return np.array([np.nan if v is None else v for v in values], dtype=float)


@dataclass
class DatasetStats:
    """Gaussian constants of a dataset.

    ``mu``/``sigma`` describe the features, ``rho``/``theta`` the targets.
    ``skewness`` and ``kurtosis`` (excess) are given per column, features
    first, and ``corr`` is the correlation matrix over the same columns.
    """

    mu: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    skewness: np.ndarray | None = None
    kurtosis: np.ndarray | None = None
    corr: np.ndarray | None = None
    column_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        for name in ("mu", "sigma", "rho", "theta"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if np.any(self.sigma <= 0) or np.any(self.theta <= 0):
            raise DatasetError("zero-variance column")

    @property
    def n_features(self) -> int:
        return self.mu.size

    def to_dict(self) -> dict:
        names = self.column_names or (
            [f"x{i + 1}" for i in range(self.mu.size)]
            + [f"t{k + 1}" for k in range(self.rho.size)])
        means = np.concatenate([self.mu, self.rho])
        stds = np.concatenate([self.sigma, self.theta])
        columns = {}
        for j, name in enumerate(names):
            entry = {"mean": float(means[j]), "std": float(stds[j])}
            # undefined for very short columns (skewness n<3, kurtosis n<4)
            if self.skewness is not None:
                entry["skewness"] = _finite_or_none(self.skewness[j])
            if self.kurtosis is not None:
                entry["kurtosis"] = _finite_or_none(self.kurtosis[j])
            columns[name] = entry
        out = {"n_features": int(self.mu.size), "n_targets": int(self.rho.size),
               "columns": columns}
        if self.corr is not None:
            out["correlation"] = {"names": names, "matrix": self.corr.tolist()}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetStats":
        names = list(d["columns"])
        n = d["n_features"]
        cols = [d["columns"][k] for k in names]
        corr = d.get("correlation")
        return cls(
            mu=[c["mean"] for c in cols[:n]],
            sigma=[c["std"] for c in cols[:n]],
            rho=[c["mean"] for c in cols[n:]],
            theta=[c["std"] for c in cols[n:]],
            skewness=_float_array([c["skewness"] for c in cols]) if "skewness" in cols[0] else None,
            kurtosis=_float_array([c["kurtosis"] for c in cols]) if "kurtosis" in cols[0] else None,
            corr=np.array(corr["matrix"]) if corr else None,
            column_names=names,
        )


def load_csv(path, n_targets: int = 1) -> RawDataset:
    """Read a comma-separated file with a header row.

    The last ``n_targets`` columns become the targets, the rest the features.
    Errors carry the 1-based line number (header is line 1) and column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        ncol = len(header)
        if n_targets < 1 or n_targets >= ncol:
            raise DatasetError(
                f"{path}: n_targets={n_targets} needs at least {n_targets + 1} columns, "
                f"header has {ncol}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != ncol:
                raise DatasetError(
                    f"{path}: line {line_no}: ragged row with {len(row)} cells, expected {ncol}")
            values = []
            for col, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: line {line_no}, column {col + 1} ({header[col]!r}): "
                        f"non-numeric cell {cell!r}") from None
                if not np.isfinite(v):
                    raise DatasetError(
                        f"{path}: line {line_no}, column {col + 1}: non-finite value {cell!r}")
                values.append(v)
            rows.append(values)
    if len(rows) < 2:
        raise DatasetError(f"{path}: need at least 2 data rows, found {len(rows)}")
    arr = np.array(rows)
    split_at = ncol - n_targets
    return RawDataset(arr[:, :split_at], arr[:, split_at:],
                      header[:split_at], header[split_at:])


def save_csv(d: RawDataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(d.column_names)
        for row in d.columns():
            w.writerow([repr(float(v)) for v in row])


def normalize(d: RawDataset, lo: float = RANGE_LO, hi: float = RANGE_HI):
    """Map every column affinely so its min goes to ``lo`` and its max to ``hi``."""
    cols = d.columns()
    cmin = cols.min(axis=0)
    cmax = cols.max(axis=0)
    flat = np.flatnonzero(cmax <= cmin)
    if flat.size:
        names = [d.column_names[j] for j in flat]
        raise DatasetError(f"constant column(s) cannot be normalized: {names}")
    scale = (hi - lo) / (cmax - cmin)
    offset = lo - scale * cmin
    z = cols * scale + offset
    # pin the endpoints exactly
    z[cols == cmin] = lo
    z[cols == cmax] = hi
    n = d.n_features
    params = NormParams(scale, offset, lo, hi)
    return RawDataset(z[:, :n], z[:, n:], list(d.feature_names), list(d.target_names)), params


def apply_normalization(d: RawDataset, params: NormParams) -> RawDataset:
    """Map ``d`` with previously fitted parameters (no endpoint pinning)."""
    cols = d.columns()
    if params.scale.size != cols.shape[1]:
        raise DatasetError(f"normalization has {params.scale.size} columns, data has {cols.shape[1]}")
    z = cols * params.scale + params.offset
    n = d.n_features
    return RawDataset(z[:, :n], z[:, n:], list(d.feature_names), list(d.target_names))


def denormalize(d: RawDataset, params: NormParams) -> RawDataset:
    cols = (d.columns() - params.offset) / params.scale
    n = d.n_features
    return RawDataset(cols[:, :n], cols[:, n:], list(d.feature_names), list(d.target_names))


def compute_stats(d: RawDataset) -> DatasetStats:
    """Means, sample standard deviations (divisor n-1), adjusted Fisher skewness
    and excess kurtosis, and the Pearson correlation matrix."""
    cols = d.columns()
    sd = cols.std(axis=0, ddof=1)
    if np.any(sd <= 0):
        bad = [d.column_names[j] for j in np.flatnonzero(sd <= 0)]
        raise DatasetError(f"zero-variance column(s): {bad}")
    mean = cols.mean(axis=0)
    n_rec = cols.shape[0]
    # the adjusted estimators need n >= 3 and n >= 4; scipy would return the biased value
    skew = sps.skew(cols, axis=0, bias=False) if n_rec >= 3 else np.full(cols.shape[1], np.nan)
    kurt = (sps.kurtosis(cols, axis=0, fisher=True, bias=False) if n_rec >= 4
            else np.full(cols.shape[1], np.nan))
    corr = np.corrcoef(cols, rowvar=False)
    corr = np.atleast_2d(corr)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, -1.0, 1.0)
    n = d.n_features
    return DatasetStats(mean[:n], sd[:n], mean[n:], sd[n:], skew, kurt, corr,
                        d.column_names)


def split(d: RawDataset, train_fraction: float = 0.75, seed: int = 0):
    """Seeded shuffle split into (train, test).

    The train partition gets ``round(train_fraction * n)`` records.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = d.n_records
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise DatasetError(f"split of {n} records at {train_fraction} leaves an empty partition")
    perm = np.random.default_rng(seed).permutation(n)
    return d.subset(np.sort(perm[:n_train])), d.subset(np.sort(perm[n_train:]))


def split_indices(n: int, train_fraction: float = 0.75, seed: int = 0):
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# Moments of the original pollen-grain data: per-column mean and standard
# deviation, and the correlation matrix of (ridge, nub, crack, weight, density).
POLLEN_MEANS = np.array([-3.637e-03, 1.597e-04, 3.103e-03, 4.237e-03, 1.662e-04])
POLLEN_STDS = np.array([6.398, 5.186, 7.875, 10.004, 3.144])
POLLEN_CORR = np.array([
    [1.00, 0.13, -0.13, -0.90, -0.57],
    [0.13, 1.00, 0.08, -0.17, 0.33],
    [-0.13, 0.08, 1.00, 0.27, -0.15],
    [-0.90, -0.17, 0.27, 1.00, 0.24],
    [-0.57, 0.33, -0.15, 0.24, 1.00],
])
POLLEN_NAMES = ["ridge", "nub", "crack", "weight", "density"]


def synthetic_surrogate(n_records: int = 3848, seed: int = 0) -> RawDataset:
    """Pollen-like regression data for dataset-free runs.

    Features are multivariate normal with the pollen feature means, standard
    deviations and correlations. The target is

        z_t = 0.8 * L(z) + 0.25 * tanh(z_2) * z_4 + 0.3 * e,   e ~ N(0, 1)

    where ``z`` are the standardized features and ``L`` is the least-squares
    linear predictor reproducing the pollen feature/target correlations;
    ``z_t`` is then rescaled to the pollen target mean and deviation.
    """
    rng = np.random.default_rng(seed)
    cxx = POLLEN_CORR[:4, :4]
    cxt = POLLEN_CORR[:4, 4]
    z = rng.standard_normal((n_records, 4)) @ np.linalg.cholesky(cxx).T
    beta = np.linalg.solve(cxx, cxt)
    lin = z @ beta
    zt = 0.8 * lin + 0.25 * np.tanh(z[:, 1]) * z[:, 3] + 0.3 * rng.standard_normal(n_records)
    zt = (zt - zt.mean()) / zt.std()
    x = POLLEN_MEANS[:4] + POLLEN_STDS[:4] * z
    t = POLLEN_MEANS[4] + POLLEN_STDS[4] * zt
    return RawDataset(x, t[:, None], POLLEN_NAMES[:4], POLLEN_NAMES[4:])


def stats_report(d: RawDataset) -> dict:
    """Stats of original and normalized data as a JSON-ready dict."""
    normed, params = normalize(d)
    return {
        "schema_version": 1,
        "n_records": d.n_records,
        "original": compute_stats(d).to_dict(),
        "normalized": compute_stats(normed).to_dict(),
        "normalization": params.to_dict(),
    }


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
