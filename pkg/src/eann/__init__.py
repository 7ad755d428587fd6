"""Eigen artificial neural networks: RBF regression networks scored by the
ground-state energy of a Schrodinger-like operator built from mutual
information between inputs and targets."""

from .data import DatasetStats, NormParams, RawDataset, compute_stats, load_csv, normalize, split
from .eigen import Spectrum, ground_state, solve
from .matrix import MatrixPair, StateBasis, assemble, energy_breakdown
from .network import NetworkParams, PotentialConstants, eval_network, make_potential

__version__ = "0.1.0"

__all__ = [
    "DatasetStats", "NormParams", "RawDataset", "compute_stats", "load_csv", "normalize", "split",
    "Spectrum", "ground_state", "solve", "MatrixPair", "StateBasis", "assemble",
    "energy_breakdown", "NetworkParams", "PotentialConstants", "eval_network", "make_potential",
]
