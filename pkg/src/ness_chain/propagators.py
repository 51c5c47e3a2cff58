"""Causal propagator of the damped linear chain in frequency and time.

Conventions: x(t) = int dw/2pi x(w) e^{iwt}, so d/dt -> iw and
D(w) = [-w^2 + 2 i gamma w + Omega_R^2]^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain_model import ChainModel, build_frequency_matrix


@dataclass(frozen=True)
class PropagatorSample:
    omega: float
    matrix: np.ndarray
    identity_residual: float


@dataclass(frozen=True)
class PoleSet:
    """Laplace poles, two per normal mode, and the modal data behind them.

    ``mode_vectors[:, j]`` is the normal mode with squared frequency
    ``mode_freq_sq[j]``; the poles of that mode are ``poles[2j]``, ``poles[2j+1]``.
    """

    poles: np.ndarray
    mode_freq_sq: np.ndarray
    mode_vectors: np.ndarray


def fourier_propagator(omega, model: ChainModel, w2: np.ndarray | None = None) -> np.ndarray:
    """D(w) for scalar or array ``omega``; array input gives shape (..., N, N)."""
    if w2 is None:
        w2 = build_frequency_matrix(model)
    w = np.asarray(omega, dtype=float)
    n = w2.shape[0]
    diag = -(w**2) + 2j * model.gamma * w
    m = w2.astype(complex) + diag[..., None, None] * np.eye(n)
    return np.linalg.inv(m)


def propagator_sample(omega: float, model: ChainModel) -> PropagatorSample:
    w2 = build_frequency_matrix(model)
    d = fourier_propagator(omega, model, w2)
    m = w2 + (-(omega**2) + 2j * model.gamma * omega) * np.eye(model.n_sites)
    res = float(np.max(np.abs(m @ d - np.eye(model.n_sites))))
    return PropagatorSample(float(omega), d, res)


def pole_set(model: ChainModel) -> PoleSet:
    w2 = build_frequency_matrix(model)
    ev, vec = np.linalg.eigh(w2)
    root = np.sqrt(complex(model.gamma**2) - ev.astype(complex))
    poles = np.empty(2 * len(ev), dtype=complex)
    poles[0::2] = -model.gamma + root
    poles[1::2] = -model.gamma - root
    return PoleSet(poles, ev, vec)


def _mode_functions(t: np.ndarray, w2: float, gamma: float):
    """Per-mode d1, d2 and d2' using kappa = sqrt(w2 - gamma^2), complex-safe.

    sin(kappa t)/kappa is written as t*sinc so the critical point kappa = 0
    needs no special case; for kappa imaginary it becomes sinh.
    """
    kappa = np.sqrt(complex(w2 - gamma**2))
    env = np.exp(-gamma * t)
    sinc = t * np.sinc(kappa * t / np.pi)
    cos = np.cos(kappa * t)
    d2 = (env * sinc).real
    d1 = (env * (cos + gamma * sinc)).real
    d2dot = (env * (cos - gamma * sinc)).real
    return d1, d2, d2dot


def _modal_sum(t: np.ndarray, model: ChainModel):
    ps = pole_set(model)
    t = np.asarray(t, dtype=float)
    n = model.n_sites
    d1 = np.zeros(t.shape + (n, n))
    d2 = np.zeros_like(d1)
    d2dot = np.zeros_like(d1)
    for j, w2 in enumerate(ps.mode_freq_sq):
        proj = np.outer(ps.mode_vectors[:, j], ps.mode_vectors[:, j])
        f1, f2, f2d = _mode_functions(t, float(w2), model.gamma)
        d1 += f1[..., None, None] * proj
        d2 += f2[..., None, None] * proj
        d2dot += f2d[..., None, None] * proj
    return d1, d2, d2dot


def time_domain_solutions(t, model: ChainModel):
    """Return (D1(t), D2(t)) for t >= 0; array input gives shape (..., N, N).

    D1(0) = I, D1'(0) = 0; D2(0) = 0, D2'(0) = I; both solve
    D'' + 2 gamma D' + Omega_R^2 D = 0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time_domain_solutions requires t >= 0")
    d1, d2, _ = _modal_sum(t, model)
    return d1, d2


def d2_derivative(t, model: ChainModel) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("d2_derivative requires t >= 0")
    return _modal_sum(t, model)[2]


def propagator_identity_residuals(model: ChainModel, omega_grid) -> dict[str, float]:
    """Maximum relative residuals of the resolvent identities over a grid.

    Keys: ``offdiag_symmetry`` (D12 = D21), ``diag_equality`` (D11 = D22, two
    sites only), ``inverse1`` and ``inverse2`` (the two rows of M D = I written
    with omega_R^2 + lambda2 on the diagonal), ``conjugate_symmetry``
    (D(-w) = conj D(w)) and ``resolvent`` (max |M D - I| for any N).
    """
    w = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if w.size == 0:
        raise ValueError("omega grid must be nonempty")
    w2 = build_frequency_matrix(model)
    d = fourier_propagator(w, model, w2)
    dm = fourier_propagator(-w, model, w2)
    scale = np.max(np.abs(d), axis=(-2, -1))
    n = model.n_sites
    m = w2 + (-(w**2) + 2j * model.gamma * w)[:, None, None] * np.eye(n)
    out = {
        "offdiag_symmetry": float(np.max(np.abs(d - np.swapaxes(d, -1, -2)).max(axis=(-2, -1)) / scale)),
        "conjugate_symmetry": float(np.max(np.abs(dm - d.conj()).max(axis=(-2, -1)) / scale)),
        "resolvent": float(np.max(np.abs(m @ d - np.eye(n)))),
    }
    if n == 2:
        lam = model.lambda2
        a = -(w**2) + 2j * model.gamma * w + model.omega_r**2 + lam
        r1, r2 = [], []
        for i, j in ((0, 1), (1, 0)):
            t1 = a * d[:, i, i]
            t2 = lam * d[:, i, j]
            s1 = np.maximum(np.abs(t1) + np.abs(t2), 1.0)
            r1.append(np.abs(t1 - t2 - 1.0) / s1)
            u1 = a * d[:, i, j]
            u2 = lam * d[:, i, i]
            s2 = np.abs(u1) + np.abs(u2)
            r2.append(np.abs(u1 - u2) / np.where(s2 > 0, s2, 1.0))
        out["diag_equality"] = float(np.max(np.abs(d[:, 0, 0] - d[:, 1, 1]) / scale))
        out["inverse1"] = float(np.max(r1))
        out["inverse2"] = float(np.max(r2))
    return out
