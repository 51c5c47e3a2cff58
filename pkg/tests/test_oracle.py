import warnings

import numpy as np
import pytest
from scipy import integrate as sint

from ness_chain.bath_kernels import BathSet, noise_kernel, two_bath_set
from ness_chain.chain_model import ChainModel
from ness_chain.currents import zeroth_order
from ness_chain.oracle import (
    CutoffRingingWarning,
    TimeDomainConfig,
    make_grid,
    noise_kernel_time,
    zeroth_order_time_domain,
)

from .conftest import rel

pytestmark = pytest.mark.filterwarnings("ignore::ness_chain.oracle.CutoffRingingWarning")


def test_horizon_floor():
    with pytest.raises(ValueError):
        TimeDomainConfig(t_max_decay=10.0)


def test_kernel_even():
    baths = BathSet((1.0,), 100.0)
    s = np.linspace(0.0, 2.0, 9)
    assert np.array_equal(noise_kernel_time(s, baths), noise_kernel_time(-s, baths))


def test_kernel_at_zero_lag():
    baths = BathSet((1.0,), 100.0)
    exact, _ = sint.quad(lambda w: noise_kernel(w, 1.0, baths) / np.pi, 0.0, 100.0, epsabs=0, epsrel=1e-12)
    got = noise_kernel_time(0.0, baths, TimeDomainConfig(d_omega=1e-3))
    assert got[0] == pytest.approx(exact, rel=1e-6)


def test_high_temperature_white_noise():
    """For beta -> 0 the kernel integrates to 2/beta like a delta function."""
    beta = 1e-3
    baths = BathSet((beta,), 50.0)
    s = np.linspace(-20.0, 20.0, 40001)
    g = noise_kernel_time(s, baths, TimeDomainConfig(d_omega=0.005))[:, 0]
    area = np.trapezoid(g, s)
    assert area == pytest.approx(2 / beta, rel=2e-3)
    assert g[20000] > 100 * np.max(np.abs(g[np.abs(s) > 2.0]))


def test_ringing_warning_for_hard_cutoff():
    m = ChainModel(2, 10.0, 10.0, 1.0)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        zeroth_order_time_domain(m, two_bath_set(m, 0.002, 100.0))
    assert any(issubclass(r.category, CutoffRingingWarning) for r in rec)


def test_grid_resolves_cutoff_and_horizon():
    m = ChainModel(2, 10.0, 10.0, 1.0)
    b = two_bath_set(m, 0.002, 100.0)
    g = make_grid(m, b, TimeDomainConfig())
    assert g.h <= 0.25 / b.cutoff
    assert g.t_max * 1.0 >= 25.0
    assert g.n_t < g.n_fourier // 2


@pytest.mark.parametrize(
    "model, t_cold, t_hot",
    [
        (ChainModel(2, 10.0, 10.0, 1.0), 0.002, 100.0),
        (ChainModel(2, 10.0, 10.0, 5.0), 0.002, 100.0),
        (ChainModel(2, 10.0, 10.0, 9.5), 0.0, 200.0),
        (ChainModel(2, 10.0, 5.0, 1.0), 0.5, 1.0),
    ],
    ids=["underdamped", "moderately-damped", "near-critical", "low-temperature"],
)
def test_agrees_with_frequency_domain(model, t_cold, t_hot):
    baths = two_bath_set(model, t_cold, t_hot)
    td = zeroth_order_time_domain(model, baths)
    fd = zeroth_order(model, baths)
    for f in ("p_inter", "p_xi", "p_gamma"):
        assert rel(getattr(td.currents, f), getattr(fd, f)) < 1e-3, f
    assert td.truncation_bound < 1e-6 * np.max(np.abs(fd.p_xi))


def test_no_bias_no_current():
    m = ChainModel(2, 10.0, 10.0, 2.0)
    td = zeroth_order_time_domain(m, two_bath_set(m, 4.0, 4.0))
    budget = td.truncation_bound + np.max(td.discretization_error["p_inter"])
    assert np.max(np.abs(td.currents.p_inter)) < budget


def test_longer_horizon_stable():
    m = ChainModel(2, 10.0, 10.0, 2.0)
    b = two_bath_set(m, 0.01, 50.0)
    a = zeroth_order_time_domain(m, b, TimeDomainConfig(t_max_decay=20.0))
    c = zeroth_order_time_domain(m, b, TimeDomainConfig(t_max_decay=40.0))
    # Both runs share the frequency step so only the horizon differs.
    a2 = zeroth_order_time_domain(m, b, TimeDomainConfig(t_max_decay=20.0, d_omega=c.grid.d_omega, dt=c.grid.h))
    diff = np.max(np.abs(a2.currents.p_inter - c.currents.p_inter))
    assert diff <= a2.truncation_bound + 1e-12 * np.max(np.abs(c.currents.p_xi))
    assert rel(a.currents.p_inter, c.currents.p_inter) < 1e-4


def test_extrapolation_beats_raw_sums():
    m = ChainModel(2, 10.0, 10.0, 1.0)
    b = two_bath_set(m, 0.002, 100.0)
    td = zeroth_order_time_domain(m, b)
    fd = zeroth_order(m, b)
    err = np.abs(td.currents.p_xi - fd.p_xi)
    assert np.all(err < td.discretization_error["p_xi"])
