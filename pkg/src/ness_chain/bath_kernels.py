"""Thermal noise kernel omega*coth(beta*omega/2) with a UV cutoff window."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .chain_model import ChainModel, normal_mode_frequencies

SMALL_X = 1e-4
LARGE_X = 50.0
DEFAULT_CUTOFF_FACTOR = 50.0


class CutoffKind(str, enum.Enum):
    HARD = "Hard"
    EXPONENTIAL = "Exponential"


@dataclass(frozen=True)
class BathSet:
    """Per-site inverse temperatures and the shared cutoff.

    ``beta = inf`` encodes a bath at zero temperature.
    """

    betas: tuple[float, ...]
    cutoff: float
    cutoff_kind: CutoffKind = CutoffKind.HARD

    def __post_init__(self) -> None:
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "cutoff_kind", CutoffKind(self.cutoff_kind))
        if not self.betas or any(not b > 0 for b in self.betas):
            raise ValueError(f"inverse temperatures must be > 0, got {self.betas!r}")
        if not self.cutoff > 0 or not np.isfinite(self.cutoff):
            raise ValueError(f"cutoff must be finite and > 0, got {self.cutoff!r}")

    @property
    def n_sites(self) -> int:
        return len(self.betas)

    def with_cutoff(self, cutoff: float) -> "BathSet":
        return BathSet(self.betas, cutoff, self.cutoff_kind)


def beta_from_temperature(t: float) -> float:
    if t < 0:
        raise ValueError(f"temperature must be >= 0, got {t!r}")
    return np.inf if t == 0 else 1.0 / t


def default_cutoff(model: ChainModel) -> float:
    return DEFAULT_CUTOFF_FACTOR * float(normal_mode_frequencies(model).max())


def two_bath_set(
    model: ChainModel,
    t_cold: float,
    t_hot: float,
    cutoff: float | None = None,
    cutoff_kind: CutoffKind = CutoffKind.HARD,
) -> BathSet:
    """Hot bath on site 0, cold bath on the last site, the rest interpolated linearly."""
    temps = np.linspace(t_hot, t_cold, model.n_sites) if model.n_sites > 1 else np.array([t_hot])
    betas = tuple(beta_from_temperature(float(t)) for t in temps)
    return BathSet(betas, default_cutoff(model) if cutoff is None else cutoff, cutoff_kind)


def check_cutoff(model: ChainModel, baths: BathSet) -> None:
    top = float(normal_mode_frequencies(model).max())
    if not baths.cutoff > top:
        raise ValueError(f"cutoff {baths.cutoff} must exceed the largest resonance {top}")
    if baths.n_sites != model.n_sites:
        raise ValueError("bath count does not match n_sites")


def _omega_coth(omega: np.ndarray, beta: float) -> np.ndarray:
    w = np.abs(omega)
    if np.isinf(beta):
        return w
    x = beta * w
    out = np.empty_like(w)
    small = x < SMALL_X
    large = x > LARGE_X
    mid = ~(small | large)
    out[small] = 2.0 / beta + beta * w[small] ** 2 / 6.0 - beta**3 * w[small] ** 4 / 360.0
    out[large] = w[large]
    out[mid] = w[mid] / np.tanh(x[mid] / 2.0)
    return out


def cutoff_window(omega, cutoff: float, kind: CutoffKind = CutoffKind.HARD) -> np.ndarray:
    w = np.abs(np.asarray(omega, dtype=float))
    if CutoffKind(kind) is CutoffKind.HARD:
        return (w <= cutoff).astype(float)
    return np.exp(-w / cutoff)


def noise_kernel(omega, beta: float, baths: BathSet):
    """omega*coth(beta*omega/2) times the cutoff window; even in omega."""
    scalar = np.ndim(omega) == 0
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    out = _omega_coth(w, beta) * cutoff_window(w, baths.cutoff, baths.cutoff_kind)
    return float(out[0]) if scalar else out


def noise_kernel_diag(omega, baths: BathSet) -> np.ndarray:
    """Diagonal of the noise matrix, shape ``omega.shape + (N,)``."""
    w = np.asarray(omega, dtype=float)
    return np.stack([noise_kernel(w, b, baths) for b in baths.betas], axis=-1)


def noise_kernel_matrix(omega, baths: BathSet) -> np.ndarray:
    d = noise_kernel_diag(omega, baths)
    return d[..., :, None] * np.eye(baths.n_sites)
