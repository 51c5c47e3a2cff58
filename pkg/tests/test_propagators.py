import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ness_chain.chain_model import ChainModel, build_frequency_matrix
from ness_chain.propagators import (
    d2_derivative,
    fourier_propagator,
    pole_set,
    propagator_identity_residuals,
    propagator_sample,
    time_domain_solutions,
)

from .conftest import chain_models

REF = ChainModel(2, 10.0, 10.0, 1.0)


def test_static_limit():
    d = fourier_propagator(0.0, REF)
    assert np.allclose(d, np.array([[110, 10], [10, 110]]) / 12000.0, rtol=1e-14, atol=0)
    assert np.all(d.imag == 0)


def test_sample_residual():
    s = propagator_sample(10.0, REF)
    assert s.identity_residual < 1e-12
    assert s.matrix.shape == (2, 2)


def test_identities_at_resonance():
    res = propagator_identity_residuals(REF, [10.0, np.sqrt(120.0)])
    assert res["inverse2"] < 1e-12
    assert res["offdiag_symmetry"] == 0.0


def test_decoupled_offdiag_vanishes():
    d = fourier_propagator(np.linspace(-30, 30, 101), ChainModel(2, 10.0, 0.0, 1.0))
    assert not np.any(d[:, 0, 1]) and not np.any(d[:, 1, 0])


def test_empty_grid_rejected():
    with pytest.raises(ValueError):
        propagator_identity_residuals(REF, [])


@settings(max_examples=30)
@given(chain_models(), st.integers(0, 2**32 - 1))
def test_identities_random(model, seed):
    w = np.random.default_rng(seed).uniform(-3000, 3000, 200)
    res = propagator_identity_residuals(model, w)
    assert max(res.values()) < 1e-12


def test_poles_closed_form():
    for gamma in (1.0, 10.0, 15.0):
        m = ChainModel(2, 10.0, 10.0, gamma)
        got = np.sort_complex(pole_set(m).poles)
        want = []
        for w2 in (100.0, 120.0):
            root = np.sqrt(complex(gamma**2 - w2))
            want += [-gamma + root, -gamma - root]
        assert np.allclose(got, np.sort_complex(np.array(want)), rtol=0, atol=1e-12)
        assert np.all(got.real < 0)


def test_initial_conditions():
    d1, d2 = time_domain_solutions(0.0, REF)
    assert np.allclose(d1, np.eye(2), atol=1e-15)
    assert np.allclose(d2, 0.0, atol=1e-15)
    assert np.allclose(d2_derivative(0.0, REF), np.eye(2), atol=1e-15)


def test_envelope_decay():
    d1, d2 = time_domain_solutions(20.0, REF)
    assert np.max(np.abs(d1)) < 1e-7 and np.max(np.abs(d2)) < 1e-7


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        time_domain_solutions(-1.0, REF)


@pytest.mark.parametrize("gamma", [1.0, 9.999, 10.0, 30.0])
def test_equation_of_motion(gamma):
    """Central differences of D2 satisfy D'' + 2 gamma D' + Omega^2 D = 0, incl. critical and overdamped."""
    m = ChainModel(2, 10.0, 10.0, gamma)
    w2 = build_frequency_matrix(m)
    # Difference step resolves the fastest decaying mode.
    h = 1e-3 / np.max(np.abs(pole_set(m).poles))
    t = np.linspace(0.05, 3.0, 40)
    _, a = time_domain_solutions(t - h, m)
    _, b = time_domain_solutions(t, m)
    _, c = time_domain_solutions(t + h, m)
    acc = (a - 2 * b + c) / h**2
    vel = d2_derivative(t, m)
    res = acc + 2 * gamma * vel + w2 @ b
    scale = np.max(np.abs(w2 @ b))
    assert np.max(np.abs(res)) / scale < 1e-6


def test_fourier_time_consistency():
    """Discrete transform of D2(t) for t >= 0 reproduces D(w) on a coarse grid."""
    t = np.linspace(0.0, 40.0, 400001)
    _, d2 = time_domain_solutions(t, REF)
    w = np.array([0.0, 3.0, 9.5, 11.0, 25.0])
    phase = np.exp(-1j * np.outer(w, t))
    got = np.trapezoid(phase[:, :, None, None] * d2[None], t, axis=1)
    want = fourier_propagator(w, REF)
    assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-3


def test_large_frequency_decay():
    for w in (1e3, 1e5):
        d = fourier_propagator(w, REF)
        assert abs(np.linalg.norm(d, 2) * w**2 - 1.0) < 200 / w**2 + 4 / w
