"""Published reference numbers used across the tests."""

import json
from pathlib import Path

import numpy as np

from eann.data import DatasetStats
from eann.network import PotentialConstants
from eann.solution import Solution

FIXTURES = Path(__file__).parent / "fixtures"

# normalized pollen data: feature means/stds, target mean/std
NORMALIZED_MU = np.array([0.0418, -0.0257, 0.0178, -0.0252])
NORMALIZED_SIGMA = np.array([0.2863, 0.3082, 0.2551, 0.2876])
NORMALIZED_RHO = np.array([0.0512])
NORMALIZED_THETA = np.array([0.2745])
SKEWNESS = np.array([-0.130, 0.072, -0.057, 0.109, 0.110])
KURTOSIS = np.array([-0.057, -0.311, -0.158, -0.163, 0.192])

TRAIN = {"alpha": 6.504147, "beta": -7.050345e-01, "gamma": 1.776158e-01, "chi": 1.752492e-01,
         "E_r": 0.768, "E": 5.969894e-02, "T": 5.944988e-02, "V": 2.490563e-04,
         "W": 2.772339, "complexity": 8.982000e-05}
TEST = {"alpha": 7.058333, "beta": -5.941080e-01, "gamma": 1.418035e-01, "chi": 1.769226e-01,
        "E_r": 0.782, "E": 5.989879e-02, "T": 5.964383e-02, "V": 2.549622e-04,
        "W": 2.772333, "complexity": 9.194974e-05}


def table_stats() -> DatasetStats:
    return DatasetStats(NORMALIZED_MU, NORMALIZED_SIGMA, NORMALIZED_RHO, NORMALIZED_THETA)


def table_potential(part: dict) -> PotentialConstants:
    return PotentialConstants([part["alpha"]], [part["beta"]], [part["gamma"]], [part["chi"]])


def reference_solution() -> Solution:
    return Solution.from_dict(json.loads((FIXTURES / "reference_solution.json").read_text()))


def pollen_path():
    """Location of the pollen CSV, or None when it has not been fetched."""
    import os
    env = os.environ.get("EANN_POLLEN")
    for p in ([Path(env)] if env else []) + [Path(__file__).parents[1] / "data" / "pollen.csv"]:
        if p.is_file():
            return p
    return None
