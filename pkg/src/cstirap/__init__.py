"""Chirped and fractional STIRAP simulator for three- and four-level Lambda systems."""
from .hamiltonian import Scheme, ScenarioSpec, f_stirap, hamiltonian_at, stirap
from .pulses import DetuningSpec, PulseSpec
from .propagator import Trajectory, final_observables, propagate

__version__ = "0.1.0"

__all__ = [
    "DetuningSpec", "PulseSpec", "Scheme", "ScenarioSpec", "Trajectory",
    "f_stirap", "final_observables", "hamiltonian_at", "propagate", "stirap",
    "__version__",
]
