"""Identity suite: every pointwise and integrated balance identity with its tolerance.

Also hosts the un-factorized two-frequency quadrature of the bath-injection
tensor, used to check the single-frequency factorization in the kernel table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath_kernels import BathSet, noise_kernel_diag
from .chain_model import ChainModel, NonlinearityKind, NonlinearitySpec, build_frequency_matrix, normal_mode_frequencies
from .currents import (
    kernel_identity_residuals,
    balance_integrand_residual,
    first_order_currents,
    first_order_tensors,
    zeroth_order,
)
from .propagators import fourier_propagator, propagator_identity_residuals
from .spectral_integrals import TWO_PI, QuadratureSpec, build_kernel_table, integration_limit, resolved_spec

POINTWISE_TOL = 1e-12
ZEROTH_BALANCE_TOL = 1e-6
FIRST_BALANCE_TOL = 1e-5
ODD_INTEGRAL_TOL = 1e-8
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: residual {self.residual:.3e} (tol {self.tolerance:.1e})"


def random_frequencies(baths: BathSet, n: int, seed: int = 0) -> np.ndarray:
    """Uniform frequencies in [-3 cutoff, 3 cutoff]."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-3 * baths.cutoff, 3 * baths.cutoff, n)


def run_identity_suite(
    model: ChainModel,
    baths: BathSet,
    strength: float = 1.0,
    spec: QuadratureSpec | None = None,
    seed: int = 0,
) -> list[IdentityCheck]:
    """Run all identities for one parameter point.

    First-order balance is checked for KG and beta-FPUT at ``strength`` (1 when
    zero is passed, since a zero coupling makes the check vacuous).
    """
    checks: list[IdentityCheck] = []
    w = random_frequencies(baths, 1000, seed)
    for key, val in propagator_identity_residuals(model, w).items():
        checks.append(IdentityCheck(f"propagator.{key}", val, POINTWISE_TOL))

    bal = balance_integrand_residual(model, baths, w)
    checks.append(IdentityCheck("balance_integrand", float(np.max(bal)), POINTWISE_TOL))

    if model.n_sites == 2:
        for key, val in kernel_identity_residuals(model, baths, w[:100]).items():
            checks.append(IdentityCheck(f"kernel_identity.{key}", val, POINTWISE_TOL))

    spec = resolved_spec(model, baths, spec)
    table = build_kernel_table(model, baths, spec)
    zeroth = zeroth_order(model, baths, table, spec)
    inter_scale = float(np.max(np.abs(zeroth.p_inter)))
    checks.append(
        IdentityCheck(
            "zeroth_order_balance",
            _relative(float(np.max(zeroth.balance_residual)), inter_scale),
            ZEROTH_BALANCE_TOL,
        )
    )

    l_norm = float(np.max(np.abs(table.L)))
    checks.append(
        IdentityCheck("odd_integral.L_diag", _relative(float(np.max(np.abs(np.diag(table.L)))), l_norm), ODD_INTEGRAL_TOL)
    )
    tensors = first_order_tensors(table)
    lam_t = tensors.Lambda
    n = model.n_sites
    lam_nnn = max(abs(float(lam_t[i, i, i, i])) for i in range(n))
    checks.append(
        IdentityCheck("odd_integral.Lambda_nnn", _relative(lam_nnn, float(np.max(np.abs(lam_t)))), ODD_INTEGRAL_TOL)
    )
    ups = max(
        float(np.max(np.abs(tensors.Upsilon[i, i] + tensors.UpsilonTilde[i, i]))) for i in range(n)
    )
    checks.append(
        IdentityCheck("upsilon_cancellation", _relative(ups, float(np.max(np.abs(tensors.Upsilon)))), ODD_INTEGRAL_TOL)
    )
    checks.append(IdentityCheck("imaginary_parts", tensors.max_imag_fraction, IMAG_TOL))

    p0 = float(np.max(np.abs(zeroth.p_inter)))
    lam = strength if strength > 0 else 1.0
    for kind in (NonlinearityKind.KG, NonlinearityKind.BETA_FPUT):
        first = first_order_currents(model, baths, NonlinearitySpec(kind, lam), tensors)
        res = float(np.max(np.abs(first.balance)))
        checks.append(IdentityCheck(f"first_order_balance.{kind.value}", _relative(res, p0), FIRST_BALANCE_TOL))
    alpha = first_order_currents(model, baths, NonlinearitySpec(NonlinearityKind.ALPHA_FPUT, lam), tensors)
    alpha_max = max(
        float(np.max(np.abs(getattr(alpha, f)))) for f in ("p_xi", "p_gamma", "p_inter2", "p_inter4")
    )
    checks.append(IdentityCheck("alpha_fput_zero", alpha_max if alpha.analytic_zero else np.inf, 1e-300))
    return checks


def _relative(value: float, scale: float) -> float:
    if scale == 0.0:
        return 0.0 if value == 0.0 else np.inf
    return value / scale


def _composite_nodes(model: ChainModel, baths: BathSet, fine: float, coarse: float, order: int = 8):
    """Composite Gauss-Legendre nodes: panels of width ``fine`` within 10 gamma of a resonance."""
    lim = integration_limit(baths)
    edges = {-lim, lim, 0.0}
    for wm in normal_mode_frequencies(model):
        for s in (-1.0, 1.0):
            lo, hi = s * wm - 10 * model.gamma, s * wm + 10 * model.gamma
            edges.update(x for x in np.arange(lo, hi + fine / 2, fine) if -lim < x < lim)
    base = sorted(edges)
    panels = []
    for a, b in zip(base[:-1], base[1:]):
        k = max(1, int(np.ceil((b - a) / coarse)))
        panels.extend(np.linspace(a, b, k + 1)[:-1] + 0.0)
    panels.append(lim)
    p = np.asarray(sorted(set(panels)))
    x, wg = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(p)
    mid = 0.5 * (p[:-1] + p[1:])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * wg).ravel()
    return nodes, weights


def gamma_direct_2d(
    model: ChainModel,
    baths: BathSet,
    index: tuple[int, int, int, int, int],
    fine: float | None = None,
    coarse: float | None = None,
    chunk: int = 512,
) -> float:
    """Bath-injection tensor entry Gamma[n, r, k, l, m] by a two-frequency sum.

    The integrand (i w) D_nr(w) G_n(w) D_nk(w) [D G D(-w')]_lm(w'), plus the
    two other placements of k among (k, l, m), is evaluated on a tensor-product
    composite Gauss-Legendre grid and summed row block by row block.
    """
    n_, r, k, l, m = index
    fine = fine or model.gamma / 8.0
    coarse = coarse or 2.0
    nodes, wts = _composite_nodes(model, baths, fine, coarse)
    w2 = build_frequency_matrix(model)
    d = fourier_propagator(nodes, model, w2)
    g = noise_kernel_diag(nodes, baths)
    corr = np.einsum("wlp,wp,wmp->wlm", d, g, d.conj()) / TWO_PI

    def single(a: int) -> np.ndarray:
        return 1j * nodes * d[:, n_, r] * g[:, n_] * d[:, n_, a] / TWO_PI

    total = 0.0 + 0.0j
    for a, (b, c) in ((k, (l, m)), (l, (k, m)), (m, (k, l))):
        row = single(a) * wts
        col = corr[:, b, c] * wts
        for s in range(0, len(nodes), chunk):
            total += np.sum(row[s : s + chunk, None] * col[None, :])
    return float(total.real)
