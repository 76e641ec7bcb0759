import numpy as np
import pytest

import belleval as bv
from belleval.bhattacharyya import click_mass_rescale
from belleval.errors import NegativeQ
from belleval.params import PRESETS
from tests_util import random_tables

BOULDER = PRESETS["boulder"].with_gamma(0.000722)


def _random_bounded_tables(rng, n, gamma):
    """Tables whose rescaled entries are all nonnegative for this gamma."""
    from belleval.lhv import MARGINAL_MATRIX, mix_weights, sample_hidden_weights
    w = sample_hidden_weights(gamma, 4 * n, rng).reshape(n, 4, 16)
    return mix_weights(w, 0.001) @ MARGINAL_MATRIX.T


def test_identity_of_indiscernibles(rng):
    # arccos near fidelity 1 square-roots the rescaling's float cancellation,
    # so "exactly zero" means ~1e-6 at gamma ~ 1e-3
    tables = _random_bounded_tables(rng, 10, BOULDER.gamma)
    for tbl in tables:
        assert bv.bhattacharyya_angle(tbl.reshape(4, 4), tbl.reshape(4, 4),
                                      BOULDER.gamma) == pytest.approx(0.0, abs=1e-5)


def test_rescaled_tables_are_normalized(rng):
    tables = _random_bounded_tables(rng, 20, BOULDER.gamma)
    for tbl in tables:
        q = click_mass_rescale(tbl.reshape(4, 4), BOULDER.gamma)
        assert q.min() >= 0.0
        assert q.sum() == pytest.approx(1.0, abs=1e-9)


def test_negative_q_raises():
    # uniform table has nulls far below 1-gamma at small gamma
    with pytest.raises(NegativeQ):
        click_mass_rescale(np.full((4, 4), 0.25), BOULDER.gamma)


def test_angle_symmetry_and_triangle_inequality(rng):
    gamma = 1.0
    tables = random_tables(rng, 30).reshape(-1, 4, 4)
    for k in range(0, 27, 3):
        a, b, c = tables[k], tables[k + 1], tables[k + 2]
        ab = bv.bhattacharyya_angle(a, b, gamma)
        ba = bv.bhattacharyya_angle(b, a, gamma)
        assert ab == pytest.approx(ba, abs=1e-12)
        ac = bv.bhattacharyya_angle(a, c, gamma)
        bc = bv.bhattacharyya_angle(b, c, gamma)
        assert ab <= ac + bc + 1e-12


def test_angle_range(rng):
    gamma = 1.0
    tables = random_tables(rng, 40).reshape(-1, 4, 4)
    for k in range(0, 38, 2):
        phi = bv.bhattacharyya_angle(tables[k], tables[k + 1], gamma)
        assert 0.0 <= phi <= np.pi / 2


def test_orthogonal_tables_give_right_angle():
    gamma = 1.0
    a = np.zeros((4, 4))
    a[:, 0] = 1.0
    b = np.zeros((4, 4))
    b[:, 3] = 1.0
    assert bv.bhattacharyya_angle(a, b, gamma) == pytest.approx(np.pi / 2)
