"""Adaptive frequency quadrature and the cached single-frequency integral families.

Every first-order tensor is a product of one single-frequency integral with
the equal-time position covariance C, so the table below holds all the
one-dimensional integrals the currents need.  All families are integrated in
one vector-valued quadrature call, so every entry shares the same nodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bath_kernels import BathSet, CutoffKind, noise_kernel_diag
from .chain_model import ChainModel, build_frequency_matrix, normal_mode_frequencies
from .propagators import fourier_propagator

TWO_PI = 2.0 * np.pi
# Exponential windows never vanish; beyond this many cutoffs e^{-x} < 1e-17.
EXP_WINDOW_SPAN = 40.0
# Relative to the integral of |f|: roughly a hundred units of double rounding.
ROUNDING_FLOOR = 1e-14


class QuadratureError(RuntimeError):
    """Raised when an integral misses its tolerance; ``failures`` names it."""

    def __init__(self, message: str, failures: list[str] | None = None):
        super().__init__(message)
        self.failures = failures or []


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 0.0
    max_subdivisions: int = 20000
    split_points: tuple[float, ...] = ()
    order: int = 10

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")
        if self.max_subdivisions < 1 or self.order < 2:
            raise ValueError("max_subdivisions >= 1 and order >= 2 required")
        sp = tuple(float(x) for x in self.split_points)
        if list(sp) != sorted(sp):
            raise ValueError("split_points must be sorted")
        object.__setattr__(self, "split_points", sp)


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    converged: bool
    n_intervals: int
    n_evals: int


def _rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec,
    domain: tuple[float, float],
) -> QuadResult:
    """Globally adaptive bisection with a nested error estimate.

    Each interval carries an n-point Gauss-Legendre value on the whole interval
    and on its two halves; their difference is the error estimate for the
    halved value, which is the one kept.  A bisected child inherits its whole
    value from the parent, so refinement costs 2n evaluations per child.

    ``f`` maps a 1-D array of nodes to an array of shape (nodes, ...).  Each
    component i must meet its own tolerance
    err_i <= max(abs_tol, rel_tol * |I_i|, ROUNDING_FLOOR * int |f_i|),
    where the last term stops the refinement of components that are small by
    cancellation (or zero by symmetry) once they are at the rounding level of
    their own integrand.
    """
    a, b = float(domain[0]), float(domain[1])
    if not b > a:
        raise ValueError("domain must satisfy a < b")
    pts = [a] + [p for p in spec.split_points if a < p < b] + [b]
    edges = np.unique(np.asarray(pts))
    xg, wg = _rule(spec.order)
    n = spec.order
    n_evals = 0

    def halves(lo: np.ndarray, hi: np.ndarray):
        nonlocal n_evals
        mid = 0.5 * (lo + hi)
        h = 0.25 * (hi - lo)
        nodes = np.concatenate(
            [(mid - h)[:, None] + h[:, None] * xg, (mid + h)[:, None] + h[:, None] * xg], axis=1
        )
        vals = np.asarray(f(nodes.ravel()))
        n_evals += nodes.size
        vals = vals.reshape((len(lo), 2, n) + vals.shape[1:])
        wts = (h[:, None] * wg).reshape(len(lo), 1, n, *([1] * (vals.ndim - 3)))
        return (vals * wts).sum(axis=2), (np.abs(vals) * wts).sum(axis=(1, 2))

    lo, hi = edges[:-1], edges[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * xg
    vals = np.asarray(f(nodes.ravel()))
    n_evals += nodes.size
    vals = vals.reshape((len(lo), n) + vals.shape[1:])
    whole = (vals * (half[:, None] * wg).reshape(len(lo), n, *([1] * (vals.ndim - 2)))).sum(axis=1)
    parts, mass = halves(lo, hi)

    converged = False
    while True:
        fine = parts.sum(axis=1)
        diff = np.abs(whole - fine)
        comp_err = diff.sum(axis=0)
        total = fine.sum(axis=0)
        tol = np.maximum(
            np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total)), ROUNDING_FLOOR * mass.sum(axis=0)
        )
        if np.all(comp_err <= tol):
            converged = True
            break
        # Rank intervals by their worst error in units of each component's tolerance.
        safe = np.where(tol > 0, tol, np.inf)
        flat = (diff / safe).reshape(len(lo), -1).max(axis=1)
        if len(lo) >= spec.max_subdivisions:
            break
        order_idx = np.argsort(flat)[::-1]
        cum = np.cumsum(flat[order_idx])
        k = int(np.searchsorted(cum, 0.5 * cum[-1])) + 1
        k = min(k, spec.max_subdivisions - len(lo))
        pick = np.zeros(len(lo), dtype=bool)
        pick[order_idx[:k]] = True
        keep = ~pick
        plo, phi = lo[pick], hi[pick]
        pm = 0.5 * (plo + phi)
        new_lo = np.concatenate([plo, pm])
        new_hi = np.concatenate([pm, phi])
        new_whole = np.concatenate([parts[pick, 0], parts[pick, 1]])
        new_parts, new_mass = halves(new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        whole = np.concatenate([whole[keep], new_whole])
        parts = np.concatenate([parts[keep], new_parts])
        mass = np.concatenate([mass[keep], new_mass])

    fine = parts.sum(axis=1)
    # Sum in ascending-frequency order so the result does not depend on refinement history.
    order_idx = np.argsort(lo)
    value = fine[order_idx].sum(axis=0)
    error = np.abs(whole - fine).sum(axis=0)
    return QuadResult(value, error, converged, len(lo), n_evals)


def default_split_points(model: ChainModel, baths: BathSet) -> tuple[float, ...]:
    """Origin, every normal-mode frequency and each one widened by +-5 gamma."""
    pts = {0.0}
    for w in normal_mode_frequencies(model):
        for p in (w - 5 * model.gamma, w, w + 5 * model.gamma):
            pts.add(float(p))
            pts.add(float(-p))
    lim = integration_limit(baths)
    return tuple(sorted(p for p in pts if -lim < p < lim))


def integration_limit(baths: BathSet) -> float:
    if baths.cutoff_kind is CutoffKind.HARD:
        return baths.cutoff
    return EXP_WINDOW_SPAN * baths.cutoff


def resolved_spec(model: ChainModel, baths: BathSet, spec: QuadratureSpec | None) -> QuadratureSpec:
    spec = spec or QuadratureSpec()
    if spec.split_points:
        return spec
    return QuadratureSpec(
        spec.rel_tol, spec.abs_tol, spec.max_subdivisions, default_split_points(model, baths), spec.order
    )


@dataclass(frozen=True)
class KernelTable:
    """Single-frequency integral families, each already divided by 2 pi.

    C[l, m]        = int [D G D(-w)]_lm
    A[n, r, k]     = int (iw) D_nr [G D]_nk
    B[n, r, k]     = int w^2 D_nr [D(-w) G D]_nk
    U[a, r, b, k]  = int (iw) D_ar [D(-w) G D]_bk
    L[n, k]        = int (iw) [D G D(-w)]_nk
    """

    C: np.ndarray
    A: np.ndarray
    B: np.ndarray
    U: np.ndarray
    L: np.ndarray
    errors: dict[str, np.ndarray] = field(default_factory=dict)
    converged: bool = True
    n_intervals: int = 0
    cutoff: float = float("nan")

    def to_json(self) -> str:
        out: dict[str, list[float]] = {}
        for name in ("C", "A", "B", "U", "L"):
            arr = getattr(self, name)
            for idx in np.ndindex(arr.shape):
                z = complex(arr[idx])
                out[f"{name}{list(idx)}"] = [z.real, z.imag]
        return json.dumps(out, sort_keys=True)


def _table_integrand(model: ChainModel, baths: BathSet, w2: np.ndarray):
    n = model.n_sites
    sizes = [n * n, n**3, n**3, n**4, n * n]

    def f(w: np.ndarray) -> np.ndarray:
        d = fourier_propagator(w, model, w2)
        dc = d.conj()
        g = noise_kernel_diag(w, baths)
        iw = (1j * w)[:, None, None]
        dgd = np.einsum("wlp,wp,wmp->wlm", d, g, dc)
        x = np.einsum("wnp,wp,wpk->wnk", dc, g, d)
        c = dgd
        a = np.einsum("wnr,wn,wnk->wnrk", d, g, d) * iw[..., None]
        bb = np.einsum("wnr,wnk->wnrk", d, x) * (w**2)[:, None, None, None]
        u = np.einsum("war,wbk->warbk", d, x) * iw[..., None, None]
        ll = dgd * iw
        m = len(w)
        return np.concatenate(
            [c.reshape(m, -1), a.reshape(m, -1), bb.reshape(m, -1), u.reshape(m, -1), ll.reshape(m, -1)],
            axis=1,
        ) / TWO_PI

    return f, sizes


def build_kernel_table(
    model: ChainModel, baths: BathSet, spec: QuadratureSpec | None = None
) -> KernelTable:
    """Integrate every family over the full symmetric window in one pass."""
    spec = resolved_spec(model, baths, spec)
    w2 = build_frequency_matrix(model)
    f, sizes = _table_integrand(model, baths, w2)
    lim = integration_limit(baths)
    res = integrate(f, spec, (-lim, lim))
    n = model.n_sites
    shapes = [(n, n), (n, n, n), (n, n, n), (n, n, n, n), (n, n)]
    names = ["C", "A", "B", "U", "L"]
    vals, errs, pos = {}, {}, 0
    for name, size, shape in zip(names, sizes, shapes):
        vals[name] = res.value[pos : pos + size].reshape(shape)
        errs[name] = res.error[pos : pos + size].reshape(shape)
        pos += size
    c = vals["C"].real
    return KernelTable(
        C=0.5 * (c + c.T),
        A=vals["A"],
        B=vals["B"],
        U=vals["U"],
        L=vals["L"],
        errors=errs,
        converged=res.converged,
        n_intervals=res.n_intervals,
        cutoff=baths.cutoff,
    )
