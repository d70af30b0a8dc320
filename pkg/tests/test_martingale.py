import math
from fractions import Fraction

import numpy as np
import pytest

from umdlab import martingale as mg
from umdlab import torus as tor


def random_martingale(r, rng):
    return mg.WalshMartingale([rng.standard_normal(2**l) for l in range(r)])


def test_table_shapes_validated():
    with pytest.raises(ValueError):
        mg.WalshMartingale([np.array([1.0, 2.0])])  # d_1 must be a constant
    with pytest.raises(ValueError):
        mg.WalshMartingale([])
    m = mg.WalshMartingale([np.array([2.0]), np.array([1.0, -1.0])])
    assert m.atoms == 4


def test_difference_property_conditional_mean_zero():
    rng = np.random.default_rng(0)
    m = random_martingale(5, rng)
    inc = m.increments()
    for l in range(m.r):
        row = inc[l]
        # group atoms by the past (low l bits) and average over the fresh sign
        past = np.arange(m.atoms) & ((1 << l) - 1)
        for b in range(1 << l):
            sel = row[past == b]
            assert abs(sel.sum()) <= 1e-12 * max(np.abs(row).max(), 1.0)


def test_transform_ratio_identity_and_p2():
    rng = np.random.default_rng(1)
    m = random_martingale(6, rng)
    assert mg.transform_ratio(m, [1] * 6, 3.7) == pytest.approx(1.0, abs=1e-15)
    for trial in range(5):
        signs = [int(s) for s in rng.choice([-1, 1], size=6)]
        assert mg.transform_ratio(m, signs, 2.0) == 1.0
        num2, den2 = mg.transform_ratio_squared_exact(m, signs)
        assert num2 == den2


def test_transform_ratio_four_atom_example():
    # d_1 = 1, d_2(eps_1) = eps_1: the signed and plain sums share one
    # distribution, so the ratio is 1 at every p
    m = mg.WalshMartingale([np.array([1.0]), np.array([1.0, -1.0])])
    plain = sorted(np.abs(m.signed_sum()))
    signed = sorted(np.abs(m.signed_sum([1, -1])))
    assert plain == signed
    assert mg.transform_ratio(m, [1, -1], 4.0) == pytest.approx(1.0, abs=1e-15)


def test_transform_involution_on_sum():
    rng = np.random.default_rng(2)
    m = random_martingale(5, rng)
    signs = [int(s) for s in rng.choice([-1, 1], size=5)]
    transformed = mg.WalshMartingale([s * t for s, t in zip(signs, m.tables)])
    # transforming the transformed sequence by the same signs restores the sum
    assert np.array_equal(transformed.signed_sum(signs), m.signed_sum())


def test_transform_ratio_rejects_bad_input():
    m = mg.WalshMartingale([np.array([0.0]), np.array([0.0, 0.0])])
    with pytest.raises(ValueError):
        mg.transform_ratio(m, [1, 1], 4.0)
    good = mg.WalshMartingale([np.array([1.0])])
    with pytest.raises(ValueError):
        mg.transform_ratio(good, [2], 4.0)
    with pytest.raises(ValueError):
        mg.transform_ratio(good, [1], 1.0)


def test_burkholder_ceiling():
    assert mg.burkholder_ceiling(2.0) == pytest.approx(1.0)
    assert mg.burkholder_ceiling(4.0) == pytest.approx(3.0)
    assert mg.burkholder_ceiling(4 / 3) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        mg.burkholder_ceiling(1.0)
    with pytest.raises(ValueError):
        mg.burkholder_ceiling(math.inf)


def test_ratio_below_ceiling_random():
    rng = np.random.default_rng(3)
    for _ in range(60):
        r = int(rng.integers(1, 9))
        m = random_martingale(r, rng)
        signs = [int(s) for s in rng.choice([-1, 1], size=r)]
        p = float(rng.uniform(1.05, 8.0))
        ratio = mg.transform_ratio(m, signs, p)
        assert ratio <= mg.burkholder_ceiling(p) + 1e-9


def test_umd_lower_search():
    res2 = mg.umd_lower_search(5, 2.0, budget=400, seed=7)
    assert res2.best_ratio == pytest.approx(1.0, abs=1e-12)
    res1 = mg.umd_lower_search(1, 4.0, budget=200, seed=7)
    assert res1.best_ratio == pytest.approx(1.0, abs=1e-15)
    res = mg.umd_lower_search(8, 4.0, budget=3000, seed=11)
    assert 1.0 < res.best_ratio <= 3.0 + 1e-9
    again = mg.umd_lower_search(8, 4.0, budget=3000, seed=11)
    assert again.best_ratio == res.best_ratio
    # the witness re-evaluates to the reported ratio
    check = mg.transform_ratio(res.martingale, res.signs, 4.0)
    assert check == res.best_ratio


def test_walsh_coefficients_reconstruct():
    rng = np.random.default_rng(4)
    k = 3
    table = rng.standard_normal(2**k)
    wc = mg.walsh_coefficients(table, k)
    idx = np.arange(2**k)
    rebuilt = np.zeros(2**k)
    for S, c in wc.items():
        chi = np.ones(2**k)
        for i in S:
            chi *= 1.0 - 2.0 * ((idx >> i) & 1)
        rebuilt += c * chi
    assert np.max(np.abs(rebuilt - table)) <= 1e-12


def test_sign_field_check_balances():
    rep = mg.sign_field_check([(1,)], tor.TorusGrid(1, 64))
    assert rep.counts == [(32, 32)]
    assert rep.balanced
    rep2 = mg.sign_field_check([(1, -1)], tor.TorusGrid(2, 16))
    assert rep2.counts == [(128, 128)]
    assert rep2.balanced
    rep3 = mg.sign_field_check([(1,), (1,)], tor.TorusGrid(1, 64))
    assert rep3.joint_uniform
    rep4 = mg.sign_field_check([(1, 1), (1, -1)], tor.TorusGrid(2, 16))
    assert rep4.balanced and rep4.joint_uniform
    with pytest.raises(ValueError):
        mg.sign_field_check([(1,)], tor.TorusGrid(1, 64, offset=False))
    with pytest.raises(ValueError):
        mg.sign_field_check([(2,)], tor.TorusGrid(1, 64))
