"""Chain topology, renormalized frequency matrix and nonlinear coupling tensors.

Units: hbar = k_B = mass = 1.  Sites are indexed 0..N-1 and coupled to their
nearest neighbours only.  Every oscillator sees the same damping rate gamma.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class NonlinearityKind(str, enum.Enum):
    KG = "KG"
    BETA_FPUT = "BetaFPUT"
    ALPHA_FPUT = "AlphaFPUT"


@dataclass(frozen=True)
class ChainModel:
    """Linear part of the chain.

    ``frequency_matrix`` is an escape hatch used by the identity suite to feed
    a deliberately inconsistent matrix; normal runs leave it as ``None``.
    """

    n_sites: int
    omega_r: float
    lambda2: float
    gamma: float
    frequency_matrix: tuple[tuple[float, ...], ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise ValueError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if not self.omega_r > 0:
            raise ValueError(f"omega_r must be > 0, got {self.omega_r!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")
        if not self.lambda2 >= 0:
            raise ValueError(f"lambda2 must be >= 0, got {self.lambda2!r}")
        if self.frequency_matrix is not None:
            m = np.asarray(self.frequency_matrix, dtype=float)
            if m.shape != (self.n_sites, self.n_sites):
                raise ValueError("frequency_matrix override must be n_sites x n_sites")

    def neighbors(self, n: int) -> list[int]:
        return [j for j in (n - 1, n + 1) if 0 <= j < self.n_sites]

    def bonds(self) -> list[tuple[int, int]]:
        return [(j, j + 1) for j in range(self.n_sites - 1)]


@dataclass(frozen=True)
class NonlinearitySpec:
    kind: NonlinearityKind
    strength: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", NonlinearityKind(self.kind))
        if not self.strength >= 0:
            raise ValueError(f"nonlinear strength must be >= 0, got {self.strength!r}")


@dataclass(frozen=True)
class CouplingTensors:
    """Coefficients of the nonlinear force in the centre/difference coordinates.

    ``mu[k, l, m, r]`` multiplies r_k r_l r_m q_r and ``sigma[k, l, m, r]``
    multiplies r_k q_l q_m q_r.  For the cubic chain ``mu3[k, l, m]``
    multiplies r_k r_l q_m and ``sigma3[k, l, m]`` multiplies q_k q_l q_m.
    """

    mu: np.ndarray
    sigma: np.ndarray
    mu3: np.ndarray
    sigma3: np.ndarray


def build_frequency_matrix(model: ChainModel) -> np.ndarray:
    """Return the real symmetric N x N matrix Omega_R^2."""
    if model.frequency_matrix is not None:
        return np.array(model.frequency_matrix, dtype=float)
    n = model.n_sites
    w2 = np.zeros((n, n))
    for i in range(n):
        w2[i, i] = model.omega_r**2 + len(model.neighbors(i)) * model.lambda2
    for i, j in model.bonds():
        w2[i, j] = w2[j, i] = -model.lambda2
    return w2


def normal_mode_frequencies(model: ChainModel) -> np.ndarray:
    """Square roots of the eigenvalues of Omega_R^2, ascending."""
    ev = np.linalg.eigvalsh(build_frequency_matrix(model))
    return np.sqrt(np.clip(ev, 0.0, None))


def _bond_vectors(n_sites: int) -> list[np.ndarray]:
    out = []
    for j in range(n_sites - 1):
        s = np.zeros(n_sites)
        s[j], s[j + 1] = 1.0, -1.0
        out.append(s)
    return out


def build_coupling_tensors(model: ChainModel, nl: NonlinearitySpec) -> CouplingTensors:
    """Coupling tensors for one nonlinearity.

    KG is replicated per site, the FPUT bond tensors per nearest-neighbour bond.
    The coefficients come from expanding V(r + q/2) - V(r - q/2) for the
    potentials lam/4 x^4 (KG), lam/4 (x_n - x_nu)^4 (beta) and
    lam/3 (x_n - x_nu)^3 (alpha).
    """
    n = model.n_sites
    lam = float(nl.strength)
    mu = np.zeros((n,) * 4)
    sigma = np.zeros((n,) * 4)
    mu3 = np.zeros((n,) * 3)
    sigma3 = np.zeros((n,) * 3)
    if nl.kind is NonlinearityKind.KG:
        for k in range(n):
            mu[k, k, k, k] = -lam
            sigma[k, k, k, k] = -lam / 4.0
    elif nl.kind is NonlinearityKind.BETA_FPUT:
        for s in _bond_vectors(n):
            s4 = np.einsum("k,l,m,r->klmr", s, s, s, s)
            mu -= lam * s4
            sigma -= lam / 4.0 * s4
    else:
        for s in _bond_vectors(n):
            s3 = np.einsum("k,l,m->klm", s, s, s)
            mu3 -= lam * s3
            sigma3 -= lam / 12.0 * s3
    return CouplingTensors(mu=mu, sigma=sigma, mu3=mu3, sigma3=sigma3)
