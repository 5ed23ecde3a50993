"""Finite-group Fourier tools for auditing a spectral approach to small-doubling structure."""
from .dichotomy import PRESETS, LedgerConfig, psl_step
from .fourier import additive_energy, dft, doubling_constant, indicator
from .groups import GroupSpec, annihilator, dual_subgroup, enumerate_subgroup, model_in_cyclic, quotient
from .kernels import BACKEND, set_backend

__version__ = "0.1.0"

__all__ = ["PRESETS", "LedgerConfig", "psl_step", "additive_energy", "dft", "doubling_constant", "indicator",
           "GroupSpec", "annihilator", "dual_subgroup", "enumerate_subgroup", "model_in_cyclic", "quotient",
           "BACKEND", "set_backend", "__version__"]
