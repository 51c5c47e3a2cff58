"""Time-domain evaluation of the zeroth-order currents by direct convolution.

The noise kernel G_H(s) = int dw/2pi G(w) e^{iws} is tabulated on a uniform
time grid by a trapezoid sum in frequency, done with one FFT.  The currents
are then half-line and double time integrals of the closed-form fundamental
solution D2(t), evaluated as discrete correlations.  Nothing here uses the
frequency-domain propagator, so agreement with ``currents.zeroth_order`` ties
the closed-form time solutions to the resolvent formulas.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .bath_kernels import BathSet, CutoffKind, noise_kernel
from .chain_model import ChainModel, build_frequency_matrix, normal_mode_frequencies
from .currents import ZerothOrderCurrents, coupling_matrix
from .propagators import d2_derivative, pole_set, time_domain_solutions
from .spectral_integrals import integration_limit

RINGING_LIMIT = 0.01


class CutoffRingingWarning(UserWarning):
    """The tabulated noise kernel oscillates well away from s = 0."""


@dataclass(frozen=True)
class TimeDomainConfig:
    """``t_max_decay`` is the horizon in units of the slowest decay time.

    ``dt`` defaults to a quarter of 1/cutoff (fine enough for the kernel's
    ringing) and never coarser than 1/40 of the fastest mode period.
    ``d_omega`` defaults to gamma/50; ``n_fourier`` is then the FFT length.
    """

    t_max_decay: float = 25.0
    dt: float | None = None
    d_omega: float | None = None
    n_fourier: int | None = None

    def __post_init__(self) -> None:
        if self.t_max_decay < 15:
            raise ValueError("t_max must cover at least 15 decay times")


@dataclass(frozen=True)
class TimeGrid:
    h: float
    d_omega: float
    n_fourier: int
    t_max: float
    n_t: int


@dataclass(frozen=True)
class TimeDomainResult:
    """``discretization_error`` holds the estimated step-size error of the
    unextrapolated sums; the extrapolated currents are typically far better."""

    currents: ZerothOrderCurrents
    truncation_bound: float
    grid: TimeGrid
    discretization_error: dict[str, np.ndarray]


def slowest_decay_rate(model: ChainModel) -> float:
    return float(np.min(-pole_set(model).poles.real))


def make_grid(model: ChainModel, baths: BathSet, cfg: TimeDomainConfig) -> TimeGrid:
    rate = slowest_decay_rate(model)
    t_max = cfg.t_max_decay / rate
    fastest = float(normal_mode_frequencies(model).max())
    h_target = cfg.dt or min(0.25 / baths.cutoff, 2 * np.pi / (40 * fastest))
    d_omega = cfg.d_omega or min(model.gamma / 50.0, rate / 5.0, 2 * np.pi / (8 * t_max))
    if cfg.n_fourier:
        m = int(cfg.n_fourier)
    else:
        m = 1 << int(np.ceil(np.log2(2 * np.pi / (h_target * d_omega))))
    lim = integration_limit(baths)
    if m <= int(np.ceil(lim / d_omega)) + 1:
        raise ValueError("n_fourier too small for the frequency window")
    h = 2 * np.pi / (m * d_omega)
    n_t = int(np.ceil(t_max / h)) + 1
    if n_t >= m // 2:
        raise ValueError("time horizon exceeds half the Fourier period")
    return TimeGrid(h, d_omega, m, (n_t - 1) * h, n_t)


def _frequency_weights(baths: BathSet, beta: float, grid: TimeGrid) -> np.ndarray:
    lim = integration_limit(baths)
    k = int(np.floor(lim / grid.d_omega + 1e-9))
    w = np.arange(k + 1) * grid.d_omega
    c = noise_kernel(w, beta, baths) * grid.d_omega / np.pi
    c[0] *= 0.5
    if baths.cutoff_kind is CutoffKind.HARD and abs(w[-1] - lim) < 1e-9 * lim:
        c[-1] *= 0.5
    return c


def _kernel_on_grid(baths: BathSet, grid: TimeGrid) -> np.ndarray:
    """G_H(j h) for j = 0..n_t-1, one column per site."""
    cols = []
    for beta in baths.betas:
        c = np.zeros(grid.n_fourier)
        cw = _frequency_weights(baths, beta, grid)
        c[: len(cw)] = cw
        cols.append(sfft.rfft(c).real[: grid.n_t])
    return np.stack(cols, axis=-1)


def _check_ringing(g: np.ndarray, baths: BathSet, grid: TimeGrid) -> float:
    start = int(np.ceil(10 * np.pi / baths.cutoff / grid.h))
    if start >= len(g):
        return 0.0
    peak = np.abs(g[0])
    ratio = float(np.max(np.abs(g[start:]) / np.where(peak > 0, peak, 1.0)))
    if ratio > RINGING_LIMIT:
        warnings.warn(
            f"noise kernel ringing reaches {ratio:.3g} of its peak beyond five cutoff periods",
            CutoffRingingWarning,
            stacklevel=3,
        )
    return ratio


def noise_kernel_time(s, baths: BathSet, cfg: TimeDomainConfig | None = None, model: ChainModel | None = None):
    """G_H(s) per site by the same frequency trapezoid rule the oracle uses.

    Returns shape ``s.shape + (N,)``.  ``model`` fixes the frequency step; when
    omitted the step is cutoff/2000.
    """
    cfg = cfg or TimeDomainConfig()
    s = np.asarray(s, dtype=float)
    if model is not None:
        d_omega = make_grid(model, baths, cfg).d_omega
    else:
        d_omega = cfg.d_omega or baths.cutoff / 2000.0
    grid = TimeGrid(1.0, d_omega, 0, 0.0, 0)
    lim = integration_limit(baths)
    w = np.arange(int(np.floor(lim / d_omega + 1e-9)) + 1) * d_omega
    flat = np.abs(s.ravel())
    out = np.empty((flat.size, len(baths.betas)))
    for j, beta in enumerate(baths.betas):
        c = _frequency_weights(baths, beta, grid)
        for a in range(0, flat.size, 256):
            out[a : a + 256, j] = np.cos(np.outer(flat[a : a + 256], w)) @ c
    return out.reshape(s.shape + (len(baths.betas),))


def _correlate(x: np.ndarray, y: np.ndarray, n_out: int) -> np.ndarray:
    """c[j] = sum_i x[i] y[i + j] for j < n_out, along axis 0."""
    n = x.shape[0]
    size = sfft.next_fast_len(2 * n)
    fx = sfft.rfft(x, size, axis=0)
    fy = sfft.rfft(y, size, axis=0)
    return sfft.irfft(np.conj(fx) * fy, size, axis=0)[:n_out]


def _time_integrals(g: np.ndarray, d2: np.ndarray, dd: np.ndarray, h: float, n: int):
    """P_xi, <p p> and <p x> moments by trapezoid sums on one uniform grid."""
    n_t = len(g)
    wts = np.ones(n_t)
    wts[0] = 0.5
    wts[-1] = 0.5
    p_xi = h * np.einsum("j,jn,jn->n", wts, np.einsum("jnn->jn", dd), g)

    # Row weights carry the trapezoid rule in s; lag weights below carry it in v.
    dd_w = dd * wts[:, None, None]
    d2_w = d2 * wts[:, None, None]
    pp = np.zeros((n, n))
    px = np.zeros((n, n))
    for k in range(n):
        gk = g[:, k] * wts
        for a in range(n):
            for b in range(n):
                r_pp = _correlate(dd_w[:, a, k], dd[:, b, k], n_t)
                r_px_plus = _correlate(dd_w[:, a, k], d2[:, b, k], n_t)
                r_px_minus = _correlate(d2_w[:, b, k], dd[:, a, k], n_t)
                # Half-weight at v = 0 in each folded half adds up to the full-line weight.
                pp[a, b] += h * h * np.dot(gk, 2.0 * r_pp)
                px[a, b] += h * h * np.dot(gk, r_px_plus + r_px_minus)
    return p_xi, pp, px


def zeroth_order_time_domain(
    model: ChainModel, baths: BathSet, cfg: TimeDomainConfig | None = None
) -> TimeDomainResult:
    """P_xi, P_gamma and the inter-site currents from truncated time integrals.

    P_xi[n]  = int_0^inf ds D2'(s)_nn G_n(s)
    <p_n p_m> = sum_k int int ds ds' D2'(s)_nk G_k(s' - s) D2'(s')_mk
    <p_n x_m> = sum_k int int ds ds' D2'(s)_nk G_k(s' - s) D2(s')_mk
    Each double integral is folded onto the lag v = |s' - s| >= 0.

    The integrands are smooth, so the trapezoid error is a series in h^2.  The
    sums are repeated on every second sample (step 2h, same kernel values) and
    combined by one Richardson step; a third of their difference is reported
    as the discretization error of the step-h sums.
    """
    cfg = cfg or TimeDomainConfig()
    grid = make_grid(model, baths, cfg)
    g = _kernel_on_grid(baths, grid)
    _check_ringing(g[:, 0], baths, grid)
    # An odd sample count lets the coarse grid end on the same time.
    n_t = grid.n_t if grid.n_t % 2 else grid.n_t - 1
    g = g[:n_t]
    t = np.arange(n_t) * grid.h
    _, d2 = time_domain_solutions(t, model)
    dd = d2_derivative(t, model)
    n = model.n_sites
    fine = _time_integrals(g, d2, dd, grid.h, n)
    coarse = _time_integrals(g[::2], d2[::2], dd[::2], 2 * grid.h, n)
    p_xi, pp, px = ((4.0 * f - c) / 3.0 for f, c in zip(fine, coarse))

    lam = coupling_matrix(build_frequency_matrix(model))

    def currents(p_xi, pp, px):
        return p_xi, -2.0 * model.gamma * np.diag(pp), lam * (px - np.diag(px)[:, None])

    p_xi, p_gamma, p_inter = currents(p_xi, pp, px)
    raw = currents(*fine)
    disc = {
        name: np.abs(r - x) for name, r, x in zip(("p_xi", "p_gamma", "p_inter"), raw, (p_xi, p_gamma, p_inter))
    }
    bal = np.abs(p_xi + p_gamma + p_inter.sum(axis=1))
    scale = max(float(np.max(np.abs(p_xi))), float(np.max(np.abs(p_gamma))))
    t_max = (n_t - 1) * grid.h
    bound = scale * float(np.exp(-slowest_decay_rate(model) * t_max))
    cur = ZerothOrderCurrents(p_xi, p_gamma, p_inter, bal, baths.cutoff)
    used = TimeGrid(grid.h, grid.d_omega, grid.n_fourier, t_max, n_t)
    return TimeDomainResult(cur, bound, used, disc)
