import numpy as np
import pytest

import normlab as nl


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_family(space, n, rng, scale=1.0):
    """A validated family with Gaussian columns (nonzero a.s.)."""
    return nl.make_family(space, scale * rng.standard_normal((n, space.dim)))


@pytest.fixture
def linf4_family(rng):
    return random_family(nl.lp_space("inf", 4), 8, rng)


@pytest.fixture
def l2_family(rng):
    return random_family(nl.lp_space(2, 3), 6, rng)


@pytest.fixture
def dim1_double():
    """Two copies of the unit vector in a 1-d space: the two-atom workhorse."""
    return nl.make_family(nl.lp_space("inf", 1), [[1.0], [1.0]])


def space_menu(m=3):
    return [
        nl.lp_space(1, m),
        nl.lp_space(2, m),
        nl.lp_space("inf", m),
        nl.polytope_space(np.vstack([np.eye(m), np.ones((1, m))])),
    ]
