"""Bargmann invariants, cycle-test circuits and the quantities built from them."""

__version__ = "0.1.0"

from .exceptions import InvariantLabError
from .states import (
    PVM,
    DensityMatrix,
    Observable,
    OrthonormalBasis,
    PureState,
    random_ginibre_density,
    random_pure_state,
    spectral_decompose,
)
from .invariants import bargmann, kd_distribution, kd_value, otoc, overlap, ps_qfi, weak_value
from .circuits import build_cycle_test, circuit_invariant, estimate_invariant, simulate_exact
from .spectrum import spectrum_from_traces

__all__ = [
    "DensityMatrix",
    "InvariantLabError",
    "Observable",
    "OrthonormalBasis",
    "PVM",
    "PureState",
    "bargmann",
    "build_cycle_test",
    "circuit_invariant",
    "estimate_invariant",
    "kd_distribution",
    "kd_value",
    "otoc",
    "overlap",
    "ps_qfi",
    "random_ginibre_density",
    "random_pure_state",
    "simulate_exact",
    "spectral_decompose",
    "spectrum_from_traces",
    "weak_value",
]
