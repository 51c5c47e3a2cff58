import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ness_chain.bath_kernels import BathSet, two_bath_set
from ness_chain.chain_model import ChainModel, NonlinearitySpec
from ness_chain.currents import first_order_tensors, ness_report
from ness_chain.spectral_integrals import (
    QuadratureError,
    QuadratureSpec,
    build_kernel_table,
    default_split_points,
    integrate,
)
from ness_chain.verify import gamma_direct_2d


def test_gaussian():
    res = integrate(lambda x: np.exp(-(x**2)), QuadratureSpec(rel_tol=1e-12), (-10.0, 10.0))
    assert res.converged
    assert res.value == pytest.approx(np.sqrt(np.pi), rel=1e-10)


@pytest.mark.parametrize("gamma", [1.0, 0.1, 0.01])
def test_lorentzian(gamma):
    w0, wc = 10.0, 500.0
    spec = QuadratureSpec(rel_tol=1e-10, split_points=(w0 - 5 * gamma, w0, w0 + 5 * gamma))
    res = integrate(lambda w: gamma / ((w - w0) ** 2 + gamma**2), spec, (-wc, wc))
    exact = np.arctan((wc - w0) / gamma) + np.arctan((wc + w0) / gamma)
    assert res.value == pytest.approx(exact, rel=1e-10)


def test_odd_integrand_vanishes():
    res = integrate(lambda w: w / (1 + w**2) ** 2, QuadratureSpec(abs_tol=1e-14), (-50.0, 50.0))
    assert abs(res.value) < 1e-14


def test_vector_valued():
    res = integrate(lambda x: np.stack([x**2, np.cos(x)], axis=-1), QuadratureSpec(), (0.0, 1.0))
    assert np.allclose(res.value, [1 / 3, np.sin(1.0)], rtol=1e-12)


def test_nonconvergence_is_flagged():
    spec = QuadratureSpec(rel_tol=1e-14, max_subdivisions=3, order=2)
    res = integrate(lambda w: 1.0 / ((w - 3.0) ** 2 + 1e-6), spec, (-10.0, 10.0))
    assert not res.converged
    assert res.n_intervals <= 3
    assert np.all(np.isfinite(res.value))


def test_bad_specs():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(split_points=(2.0, 1.0))
    with pytest.raises(ValueError):
        integrate(np.sin, QuadratureSpec(), (1.0, 1.0))


def test_split_points(ref_model, ref_baths):
    pts = default_split_points(ref_model, ref_baths)
    assert list(pts) == sorted(pts)
    for w in (10.0, np.sqrt(120.0)):
        assert any(abs(p - w) < 1e-12 for p in pts)
        assert any(abs(p + w - 5.0) < 1e-12 for p in pts)
    assert 0.0 in pts


@pytest.fixture(scope="module")
def table(ref_model, ref_baths):
    return build_kernel_table(ref_model, ref_baths)


def test_table_invariants(table):
    assert table.converged
    assert np.array_equal(table.C, table.C.T)
    assert np.all(np.linalg.eigvalsh(table.C) > 0)
    for f in ("A", "B", "U", "L"):
        assert np.all(np.isfinite(getattr(table, f)))
    assert np.max(np.abs(np.diag(table.L))) < 1e-8 * np.max(np.abs(table.L))


def test_equal_temperatures_symmetric_c():
    model = ChainModel(2, 10.0, 10.0, 1.0)
    t = build_kernel_table(model, two_bath_set(model, 3.0, 3.0))
    assert t.C[0, 0] == pytest.approx(t.C[1, 1], rel=1e-12)


def test_decoupled_table_is_site_diagonal():
    model = ChainModel(2, 10.0, 0.0, 1.0)
    t = build_kernel_table(model, two_bath_set(model, 1.0, 2.0))
    for n in range(2):
        r = 1 - n
        assert not np.any(t.A[n, r]) and not np.any(t.U[n, r])


def test_refinement_stability(ref_model, ref_baths, table):
    fine = build_kernel_table(ref_model, ref_baths, QuadratureSpec(rel_tol=5e-9))
    for f in ("C", "A", "B", "U", "L"):
        diff = np.abs(getattr(fine, f) - getattr(table, f))
        assert np.all(diff <= table.errors[f] + 1e-15 * np.max(np.abs(getattr(table, f))))


def test_table_json_roundtrip(table):
    data = json.loads(table.to_json())
    assert data["C[0, 1]"] == [table.C[0, 1], 0.0]
    re, im = data["U[1, 0, 0, 1]"]
    assert complex(re, im) == complex(table.U[1, 0, 0, 1])


def test_factorization_against_direct_2d(ref_model, ref_baths, table):
    rng = np.random.default_rng(7)
    idx = tuple(int(i) for i in rng.integers(0, 2, 5))
    gamma = first_order_tensors(table).Gamma
    direct = gamma_direct_2d(ref_model, ref_baths, idx)
    assert direct == pytest.approx(gamma[idx], rel=1e-6)


def test_strict_report_names_failing_integrals(ref_model, ref_baths):
    spec = QuadratureSpec(rel_tol=1e-14, max_subdivisions=20)
    with pytest.raises(QuadratureError) as info:
        ness_report(ref_model, ref_baths, NonlinearitySpec("KG", 1.0), spec)
    assert info.value.failures
    assert all(f.split("[")[0] in {"C", "A", "B", "U", "L", "p_xi", "p_gamma", "p_inter"} for f in info.value.failures)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 5.0), st.floats(0.5, 30.0))
def test_table_imaginary_parts_small(gamma, lam2):
    model = ChainModel(2, 10.0, lam2, gamma)
    t = build_kernel_table(model, two_bath_set(model, 0.5, 50.0))
    assert first_order_tensors(t).max_imag_fraction < 1e-10


def test_cutoff_mismatch_rejected(ref_model, ref_baths, table):
    from ness_chain.currents import zeroth_order

    with pytest.raises(ValueError):
        zeroth_order(ref_model, BathSet(ref_baths.betas, 2 * ref_baths.cutoff), table)
