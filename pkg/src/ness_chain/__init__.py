"""Steady-state energy currents through a damped oscillator chain with weak nonlinearity."""

from .bath_kernels import BathSet, CutoffKind, noise_kernel, noise_kernel_matrix, two_bath_set
from .chain_model import ChainModel, NonlinearityKind, NonlinearitySpec, build_coupling_tensors, build_frequency_matrix
from .currents import CurrentReport, ness_report, zeroth_order
from .propagators import fourier_propagator, time_domain_solutions
from .spectral_integrals import KernelTable, QuadratureError, QuadratureSpec, build_kernel_table

__version__ = "0.1.0"

__all__ = [
    "BathSet",
    "ChainModel",
    "CurrentReport",
    "CutoffKind",
    "KernelTable",
    "NonlinearityKind",
    "NonlinearitySpec",
    "QuadratureError",
    "QuadratureSpec",
    "build_coupling_tensors",
    "build_frequency_matrix",
    "build_kernel_table",
    "fourier_propagator",
    "ness_report",
    "noise_kernel",
    "noise_kernel_matrix",
    "time_domain_solutions",
    "two_bath_set",
    "zeroth_order",
]
