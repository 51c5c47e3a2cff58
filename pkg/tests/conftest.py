import numpy as np
import pytest
from hypothesis import strategies as st

from ness_chain.bath_kernels import two_bath_set
from ness_chain.chain_model import ChainModel

REF = dict(omega_r=10.0, gamma=1.0, t_hot=100.0, t_cold=0.002)


@pytest.fixture(scope="session")
def ref_model():
    return ChainModel(2, REF["omega_r"], 10.0, REF["gamma"])


@pytest.fixture(scope="session")
def ref_baths(ref_model):
    return two_bath_set(ref_model, REF["t_cold"], REF["t_hot"])


@st.composite
def chain_models(draw, n_sites=st.integers(2, 4), gamma=st.floats(0.2, 20.0)):
    return ChainModel(
        draw(n_sites),
        draw(st.floats(0.5, 20.0)),
        draw(st.floats(0.0, 40.0)),
        draw(gamma),
    )


@st.composite
def underdamped_two_site(draw):
    """Two-site chains with gamma below the lower mode frequency."""
    omega_r = draw(st.floats(3.0, 15.0))
    gamma = draw(st.floats(0.3, 0.8 * omega_r))
    return ChainModel(2, omega_r, draw(st.floats(0.5, 30.0)), gamma)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
