"""Zeroth- and first-order steady-state energy currents and their balance.

Sign conventions: ``p_inter[n, v]`` is the power flowing into site n from its
neighbour v.  Baths are ordered hot (site 0) to cold (last site), so the
reference current for the nonlinearity ratio is ``p_inter[1, 0]``, the flow
from the hot site 0 into site 1, which is positive under a thermal bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bath_kernels import BathSet, check_cutoff, noise_kernel_diag
from .chain_model import (
    ChainModel,
    NonlinearityKind,
    NonlinearitySpec,
    build_coupling_tensors,
    build_frequency_matrix,
)
from .propagators import fourier_propagator
from .spectral_integrals import (
    TWO_PI,
    KernelTable,
    QuadratureError,
    QuadratureSpec,
    build_kernel_table,
    integrate,
    integration_limit,
    resolved_spec,
)

VALIDITY_THRESHOLD = 0.1
CUTOFF_DEPENDENT_FIELDS = ("p_xi", "p_gamma")


@dataclass(frozen=True)
class ZerothOrderCurrents:
    p_xi: np.ndarray
    p_gamma: np.ndarray
    p_inter: np.ndarray
    balance_residual: np.ndarray
    cutoff: float
    error: dict[str, np.ndarray] = field(default_factory=dict)
    converged: bool = True
    cutoff_dependent: tuple[str, ...] = CUTOFF_DEPENDENT_FIELDS


@dataclass(frozen=True)
class FirstOrderTensors:
    """Index layout: Gamma[n, r, k, l, m], Upsilon[v, n, r, k, l, m], Lambda[n, k, l, m]."""

    Gamma: np.ndarray
    GammaTilde: np.ndarray
    Upsilon: np.ndarray
    UpsilonTilde: np.ndarray
    Lambda: np.ndarray
    max_imag_fraction: float = 0.0


@dataclass(frozen=True)
class FirstOrderCurrents:
    p_xi: np.ndarray
    p_gamma: np.ndarray
    p_inter2: np.ndarray
    p_inter4: np.ndarray
    analytic_zero: bool = False

    @property
    def p_inter(self) -> np.ndarray:
        return self.p_inter2 + self.p_inter4

    @property
    def balance(self) -> np.ndarray:
        return self.p_xi + self.p_gamma + self.p_inter.sum(axis=1)


@dataclass(frozen=True)
class CurrentReport:
    zeroth: ZerothOrderCurrents
    first_order: FirstOrderCurrents
    nonlinearity: NonlinearitySpec
    ratio: float
    balance_residual_first: np.ndarray
    perturbative_validity: bool
    reference_bond: tuple[int, int] = (1, 0)


def coupling_matrix(w2: np.ndarray) -> np.ndarray:
    """Bilinear couplings lambda_{n v} = -Omega^2_{n v} off the diagonal, zero on it."""
    lam = -np.array(w2, dtype=float)
    np.fill_diagonal(lam, 0.0)
    return lam


def _zeroth_integrand(model: ChainModel, baths: BathSet, w2: np.ndarray):
    n = model.n_sites
    lam = coupling_matrix(w2)
    gamma = model.gamma

    def f(w: np.ndarray) -> np.ndarray:
        d = fourier_propagator(w, model, w2)
        g = noise_kernel_diag(w, baths)
        diag = np.einsum("wnn->wn", d)
        p_xi = -w[:, None] * diag.imag * g
        p_gamma = -2.0 * gamma * (w**2)[:, None] * np.einsum("wnk,wk->wn", np.abs(d) ** 2, g)
        cross = np.einsum("wnk,wvk,wk->wnv", d, d.conj(), g).imag
        p_inter = -lam[None] * w[:, None, None] * cross
        m = len(w)
        return np.concatenate([p_xi, p_gamma, p_inter.reshape(m, n * n)], axis=1) / TWO_PI

    return f


def zeroth_order(
    model: ChainModel,
    baths: BathSet,
    table: KernelTable | None = None,
    spec: QuadratureSpec | None = None,
) -> ZerothOrderCurrents:
    """Bath injection, dissipation and inter-site currents from one shared quadrature.

    The three integrands cancel pointwise, so integrating them on common nodes
    makes the per-site balance hold to rounding.
    """
    if table is not None and table.cutoff != baths.cutoff:
        raise ValueError("kernel table and baths use different cutoffs")
    spec = resolved_spec(model, baths, spec)
    w2 = build_frequency_matrix(model)
    n = model.n_sites
    lim = integration_limit(baths)
    res = integrate(_zeroth_integrand(model, baths, w2), spec, (-lim, lim))
    v, e = res.value, res.error
    p_xi, p_gamma = v[:n].copy(), v[n : 2 * n].copy()
    p_inter = v[2 * n :].reshape(n, n).copy()
    bal = np.abs(p_xi + p_gamma + p_inter.sum(axis=1))
    errs = {"p_xi": e[:n], "p_gamma": e[n : 2 * n], "p_inter": e[2 * n :].reshape(n, n)}
    return ZerothOrderCurrents(p_xi, p_gamma, p_inter, bal, baths.cutoff, errs, res.converged)


def balance_integrand_residual(model: ChainModel, baths: BathSet | None, omega) -> np.ndarray:
    """Relative residual of the pointwise zeroth-order balance, shape (..., n, k).

    Entry [n, k] checks
    delta_nk w Im D_nn + 2 gamma w^2 |D_nk|^2 + sum_v lambda_nv w Im(D_nk conj D_vk) = 0,
    the coefficient of bath k in site n's balance.  At two sites k = n is the
    site's own identity and k = v its neighbour companion.  The noise kernel
    multiplies the whole bracket, so ``baths`` is accepted but not needed.
    """
    w = np.asarray(omega, dtype=float)
    w2 = build_frequency_matrix(model)
    lam = coupling_matrix(w2)
    d = fourier_propagator(w, model, w2)
    n = model.n_sites
    wb = w[..., None, None]
    t1 = np.eye(n) * (wb * np.einsum("...nn->...n", d).imag[..., :, None])
    t2 = 2.0 * model.gamma * wb**2 * np.abs(d) ** 2
    t3 = wb * np.einsum("nv,...nk,...vk->...nk", lam, d, d.conj()).imag
    scale = np.maximum(np.maximum(np.abs(t1), np.abs(t2)), np.abs(t3))
    total = np.abs(t1 + t2 + t3)
    return np.where(scale > 0, total / np.where(scale > 0, scale, 1.0), 0.0)


def symmetrize_klm(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """T[..., k, l, m] = x[..., k] C_lm + x[..., l] C_km + x[..., m] C_kl."""
    t = np.einsum("...k,lm->...klm", x, c)
    return t + np.swapaxes(t, -3, -2) + np.swapaxes(t, -3, -1)


def first_order_tensors(table: KernelTable) -> FirstOrderTensors:
    """Assemble the first-order tensors as products of single-frequency families with C."""
    c = table.C
    # U[a, r, b, k] -> Upsilon factor [v, n, r, k] = U[n, r, v, k]
    ups_x = np.transpose(table.U, (2, 0, 1, 3))
    # UpsilonTilde factor [v, n, r, k] = -U[v, r, n, k]
    upt_x = -np.transpose(table.U, (0, 2, 1, 3))
    parts = {"A": table.A, "B": table.B, "U": table.U, "L": table.L}
    frac = 0.0
    for arr in parts.values():
        top = float(np.max(np.abs(arr))) or 1.0
        frac = max(frac, float(np.max(np.abs(arr.imag))) / top)
    return FirstOrderTensors(
        Gamma=symmetrize_klm(table.A.real, c),
        GammaTilde=2.0 * symmetrize_klm(table.B.real, c),
        Upsilon=symmetrize_klm(ups_x.real, c),
        UpsilonTilde=symmetrize_klm(upt_x.real, c),
        Lambda=symmetrize_klm(table.L.real, c),
        max_imag_fraction=frac,
    )


def _zero_block(n: int, analytic: bool) -> FirstOrderCurrents:
    z = np.zeros(n)
    zz = np.zeros((n, n))
    return FirstOrderCurrents(z, z.copy(), zz, zz.copy(), analytic_zero=analytic)


def first_order_currents(
    model: ChainModel,
    baths: BathSet,
    nl: NonlinearitySpec,
    tensors: FirstOrderTensors,
) -> FirstOrderCurrents:
    """Contract the first-order tensors with the nonlinear force coefficients.

    P_xi[n]    = sum mu_klmr Gamma[n, r, k, l, m]
    P_gamma[n] = -2 gamma sum mu_klmr GammaTilde[n, r, k, l, m]
    P2[n, v]   = lambda_nv sum mu_klmr (Y + Yt)[v, n, r, k, l, m] - (Y + Yt)[n, n, r, k, l, m]
    P4[n, v]   = -lambda4 sum s_k s_l s_m Lambda[n, k, l, m],  s = e_n - e_v
    The cubic chain has no first-order correction at all, so it returns an
    exact zero block without touching the tensors.
    """
    n = model.n_sites
    if nl.kind is NonlinearityKind.ALPHA_FPUT:
        return _zero_block(n, analytic=True)
    mu = build_coupling_tensors(model, nl).mu
    lam = coupling_matrix(build_frequency_matrix(model))
    p_xi = np.einsum("klmr,nrklm->n", mu, tensors.Gamma)
    p_gamma = -2.0 * model.gamma * np.einsum("klmr,nrklm->n", mu, tensors.GammaTilde)
    s = np.einsum("klmr,vnrklm->vn", mu, tensors.Upsilon + tensors.UpsilonTilde)
    p2 = lam * (s.T - np.diag(s)[:, None])
    p4 = np.zeros((n, n))
    if nl.kind is NonlinearityKind.BETA_FPUT:
        for a, b in model.bonds():
            for i, j in ((a, b), (b, a)):
                sv = np.zeros(n)
                sv[i], sv[j] = 1.0, -1.0
                p4[i, j] = -nl.strength * np.einsum("k,l,m,klm->", sv, sv, sv, tensors.Lambda[i])
    # Quartic on-site potentials exchange no energy across bonds, so KG keeps p4 = 0.
    return FirstOrderCurrents(p_xi, p_gamma, p2, p4)


def _failures(res_err: dict[str, np.ndarray], values: dict[str, np.ndarray], rel_tol: float) -> list[str]:
    scale = max(float(np.max(np.abs(v))) for v in values.values()) or 1.0
    out = []
    for name, err in res_err.items():
        for idx in np.ndindex(err.shape):
            if err[idx] > rel_tol * scale:
                out.append(f"{name}{list(idx)}")
    return out


def kernel_identity_residuals(model: ChainModel, baths: BathSet | None, omega) -> dict[str, float]:
    """Residuals of the two-site kernel identities K and L at the given frequencies.

    K^{nr}_{vk} = w Im(D_nr D_nk) + 4 gamma w^2 Re(D_nr D*_nn D_nk)
                  + lambda2 w [Im(D_nr D*_vn D_nk) - Im(D_vr D*_nn D_nk)]
    L^{nr}_{vk} = 4 gamma w^2 Re(D_nr D*_nv D_vk)
                  + lambda2 w [Im(D_nr D*_vv D_vk) - Im(D_vr D*_nv D_vk)]
    Checks K^{nv} = L^{nv} = 0, K^{nn}_{vk} = w Im(D*_nn D_nk) and
    L^{nn}_{vk} = w Im(D*_nv D_vk), each relative to the largest term.
    """
    if model.n_sites != 2:
        raise ValueError("kernel identities are defined for two sites")
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    d = fourier_propagator(w, model)
    dc = d.conj()
    lam, g = model.lambda2, model.gamma
    out = {"K_offdiag": 0.0, "L_offdiag": 0.0, "K_diag": 0.0, "L_diag": 0.0}

    def rel(val, terms):
        scale = np.max(np.abs(np.stack(terms)), axis=0)
        return float(np.max(np.where(scale > 0, np.abs(val) / np.where(scale > 0, scale, 1.0), 0.0)))

    for n_, v_ in ((0, 1), (1, 0)):
        for k in (n_, v_):
            for r in (n_, v_):
                k1 = w * (d[:, n_, r] * d[:, n_, k]).imag
                k2 = 4 * g * w**2 * (d[:, n_, r] * dc[:, n_, n_] * d[:, n_, k]).real
                k3 = lam * w * (d[:, n_, r] * dc[:, v_, n_] * d[:, n_, k]).imag
                k4 = -lam * w * (d[:, v_, r] * dc[:, n_, n_] * d[:, n_, k]).imag
                l1 = 4 * g * w**2 * (d[:, n_, r] * dc[:, n_, v_] * d[:, v_, k]).real
                l2 = lam * w * (d[:, n_, r] * dc[:, v_, v_] * d[:, v_, k]).imag
                l3 = -lam * w * (d[:, v_, r] * dc[:, n_, v_] * d[:, v_, k]).imag
                kk, ll = k1 + k2 + k3 + k4, l1 + l2 + l3
                if r == v_:
                    out["K_offdiag"] = max(out["K_offdiag"], rel(kk, [k1, k2, k3, k4]))
                    out["L_offdiag"] = max(out["L_offdiag"], rel(ll, [l1, l2, l3]))
                else:
                    kt = w * (dc[:, n_, n_] * d[:, n_, k]).imag
                    lt = w * (dc[:, n_, v_] * d[:, v_, k]).imag
                    out["K_diag"] = max(out["K_diag"], rel(kk - kt, [k1, k2, k3, k4, kt]))
                    out["L_diag"] = max(out["L_diag"], rel(ll - lt, [l1, l2, l3, lt]))
    return out


def ness_report(
    model: ChainModel,
    baths: BathSet,
    nl: NonlinearitySpec,
    spec: QuadratureSpec | None = None,
    strict: bool = True,
) -> CurrentReport:
    """Full pipeline for one parameter point.

    With ``strict`` any integral that misses its tolerance raises
    QuadratureError naming every failing entry.
    """
    check_cutoff(model, baths)
    spec = resolved_spec(model, baths, spec)
    table = build_kernel_table(model, baths, spec)
    zeroth = zeroth_order(model, baths, table, spec)
    if strict and not (table.converged and zeroth.converged):
        failing = []
        if not table.converged:
            vals = {k: getattr(table, k) for k in ("C", "A", "B", "U", "L")}
            failing += _failures(table.errors, vals, spec.rel_tol)
        if not zeroth.converged:
            vals = {"p_xi": zeroth.p_xi, "p_gamma": zeroth.p_gamma, "p_inter": zeroth.p_inter}
            failing += _failures(zeroth.error, vals, spec.rel_tol)
        raise QuadratureError("quadrature did not converge: " + ", ".join(failing), failing)
    tensors = first_order_tensors(table)
    first = first_order_currents(model, baths, nl, tensors)
    bond = (1, 0) if model.n_sites > 1 else (0, 0)
    p0 = float(zeroth.p_inter[bond])
    p1 = float(first.p_inter[bond])
    if p1 == 0.0:
        ratio = 0.0
    elif p0 == 0.0:
        ratio = float("nan")
    else:
        ratio = p1 / p0
    return CurrentReport(
        zeroth=zeroth,
        first_order=first,
        nonlinearity=nl,
        ratio=ratio,
        balance_residual_first=np.abs(first.balance),
        perturbative_validity=bool(abs(ratio) < VALIDITY_THRESHOLD),
        reference_bond=bond,
    )
