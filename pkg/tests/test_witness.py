import numpy as np
import pytest

from umdlab import symbols as sy
from umdlab import torus as tor
from umdlab import witness as wit


def corollary_family(p=2.0):
    return sy.DerivativeFamily((1, 1), ((2, 0), (0, 2)), p, frozenset({0}))


def test_square_wave_basics():
    a = wit.square_wave_poly(1)
    th = np.linspace(-0.4, 0.4, 9)
    assert np.max(np.abs(a.evaluate(th).real - (4 / np.pi) * np.sin(2 * np.pi * th))) < 1e-14
    assert np.max(np.abs(a.evaluate(th).imag)) < 1e-15
    assert 0 not in a.coeffs
    assert a.is_real
    a5 = wit.square_wave_poly(5)
    assert a5.degree == 5
    assert a5.coefficient_a_norm() == pytest.approx((4 / np.pi) * (1 + 1 / 3 + 1 / 5),
                                                    rel=1e-14)
    with pytest.raises(ValueError):
        wit.square_wave_poly(0)


@pytest.mark.parametrize("D", [5, 63])
def test_sign_distance_matches_parseval_tail(D):
    a = wit.square_wave_poly(D)
    measured = wit.sign_distance(a, 2.0)
    analytic = np.sqrt(1 - (8 / np.pi**2) * sum(1.0 / l**2 for l in range(1, D + 1, 2)))
    assert abs(measured - analytic) <= 1e-6


def test_sign_distance_decreases_with_degree():
    deltas = [wit.sign_distance(wit.square_wave_poly(D), 4.0) for D in (3, 7, 15, 31)]
    assert all(a > b for a, b in zip(deltas, deltas[1:]))


def test_a_norm_examples():
    grid = tor.TorusGrid(2, 16)
    assert tor.a_norm(tor.mode(grid, (1, 1))) == pytest.approx(1.0)
    f = tor.mode(grid, (1, 0), 3.0) + tor.mode(grid, (0, 1), -4.0)
    assert tor.a_norm(f) == pytest.approx(7.0)
    lifted = wit.lift_to_torus(wit.square_wave_poly(5), (1, 1), grid)
    assert tor.a_norm(lifted) == pytest.approx((4 / np.pi) * (1 + 1 / 3 + 1 / 5), rel=1e-14)


def test_lift_support_and_values():
    grid = tor.TorusGrid(2, 16)
    one_mode = wit.TrigPoly1D({1: 1.0})
    lifted = wit.lift_to_torus(one_mode, (1, 1), grid)
    assert lifted.coefficient((1, 1)) == pytest.approx(1.0)
    assert tor.a_norm(lifted) == pytest.approx(1.0)
    pm = wit.TrigPoly1D({1: 0.5, -1: 0.5})
    lifted2 = wit.lift_to_torus(pm, (1, -1), grid)
    assert set(dict(lifted2.spectral_items())) == {(1, -1), (-1, 1)}
    a = wit.square_wave_poly(5)
    lifted3 = wit.lift_to_torus(a, (1, 1), grid)
    t1, t2 = grid.meshgrid()
    direct = a.evaluate(t1 + t2)
    phys = tor.inverse_transform(lifted3).values
    assert np.max(np.abs(phys - direct)) <= 1e-12
    with pytest.raises(ValueError):
        wit.lift_to_torus(wit.square_wave_poly(9), (1, 1), tor.TorusGrid(2, 8))


def test_eigen_witness_pair_relations():
    fam = corollary_family()
    grid = tor.TorusGrid(2, 16)
    a = wit.square_wave_poly(5)
    ap, am = wit.eigen_witness_pair(fam, a, grid)
    res = wit.eigen_relation_residuals(fam, ap, am)
    assert max(res.values()) <= 1e-12
    # single-mode witness: machine-exact diagonal action
    one = wit.TrigPoly1D({1: 1.0})
    ap1, am1 = wit.eigen_witness_pair(fam, one, grid)
    res1 = wit.eigen_relation_residuals(fam, ap1, am1)
    assert max(res1.values()) <= 1e-15
    unnormalized = sy.DerivativeFamily((2, 1), ((3, 0), (1, 2)), 2.0, frozenset({0}))
    with pytest.raises(ValueError):
        wit.eigen_witness_pair(unnormalized, a, grid)


def test_bourgain_stack_shapes_and_orthogonality():
    grid = tor.TorusGrid(1, 16)
    z1 = tor.mode(grid, (1,))
    s1 = wit.bourgain_stack([z1], [1.0], (-1,))
    assert s1.assembled.coefficient((1,)) == pytest.approx(-1.0)
    # two layers, single modes: exactly two spectral lines at predicted spots
    z2 = tor.mode(grid, (2,))
    phi2 = tor.mode(grid, (3,), 2.0)
    st = wit.bourgain_stack([z1, z2], [1.0, phi2])
    items = dict(st.assembled.spectral_items())
    assert set(items) == {(1, 0), (3, 2)}
    assert items[(1, 0)] == pytest.approx(1.0)
    assert items[(3, 2)] == pytest.approx(2.0)
    assert st.verify_pointwise() <= 1e-10
    # disjoint supports: squared L2 norms add layerwise for any signs
    for signs in [(1, 1), (1, -1), (-1, 1)]:
        s = wit.bourgain_stack([z1, z2], [1.0, phi2], signs)
        lhs = tor.lp_norm(s.assembled, 2.0) ** 2
        rhs = (tor.lp_norm(z1, 2.0) ** 2
               + tor.lp_norm(z2, 2.0) ** 2 * tor.lp_norm(phi2, 2.0) ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-12)
    with pytest.raises(ValueError):
        wit.bourgain_stack([z1, z2], [1.0, tor.mode(tor.TorusGrid(2, 16), (1, 0))])


def test_theorem_lower_bound_cases():
    fam = corollary_family()
    grid = tor.TorusGrid(2, 16)
    a = wit.square_wave_poly(5)
    ap, am = wit.eigen_witness_pair(fam, a, grid)
    phi2 = wit.tensor_product_field([(0, am)], 1, 2, 16)
    plus = wit.bourgain_stack([ap, am], [1.0, phi2])
    same = wit.bourgain_stack([ap, am], [1.0, phi2])
    same.layers = plus.layers
    assert wit.theorem_lower_bound(fam, plus, same) == pytest.approx(0.5, abs=1e-12)
    signed = wit.bourgain_stack([ap, am], [1.0, phi2], (1, -1))
    signed.layers = plus.layers
    assert wit.theorem_lower_bound(fam, plus, signed) == pytest.approx(0.5, abs=1e-12)
    res = wit.multiplier_identity_residuals(fam, plus, signed)
    assert max(res.values()) <= 1e-12
    other = wit.bourgain_stack([am, ap], [1.0, phi2], (1, -1))
    with pytest.raises(ValueError):
        wit.theorem_lower_bound(fam, plus, other)


def test_walsh_witness_stacks_pipeline_shape():
    fam = corollary_family()
    grid = tor.TorusGrid(2, 16)
    a = wit.square_wave_poly(5)
    tables = [np.array([1.0]), np.array([1.0, -1.0])]
    plus, signed = wit.walsh_witness_stacks(fam, a, grid, (1, -1), tables)
    assert plus.verify_pointwise() <= 1e-10
    assert signed.verify_pointwise() <= 1e-10
    assert wit.theorem_lower_bound(fam, plus, signed) == pytest.approx(0.5, abs=1e-12)
    res = wit.multiplier_identity_residuals(fam, plus, signed)
    assert max(res.values()) <= 1e-12


def test_bourgain_shift_single_layer():
    grid = tor.TorusGrid(1, 16)
    f = tor.mode(grid, (2,))
    tbar = np.array([0.3])
    out = wit.bourgain_shift(f, (5,), tbar)
    items = dict(out.spectral_items())
    assert set(items) == {(10,)}
    assert items[(10,)] == pytest.approx(np.exp(2j * np.pi * 2 * 0.3))
    assert tor.a_norm(out) == pytest.approx(tor.a_norm(f))


def test_bourgain_shift_injectivity_and_collision():
    # all (s, k) with |s|,|k| <= 2, k != 0 map to distinct 5 s + 25 k
    seen = set()
    for s in range(-2, 3):
        for k in range(-2, 3):
            if k == 0:
                continue
            v = 5 * s + 25 * k
            assert v not in seen
            seen.add(v)
    grid = tor.TorusGrid(2, 16)
    entries = {(1, 2): 1.0, (2, 1): 1.0}
    f = tor.TorusField(grid, tor.SPECTRAL, entries)
    out = wit.bourgain_shift(f, (5, 25), np.zeros(2))
    assert len(dict(out.spectral_items())) == 2
    # moduli too close: (1,2) -> 1*1 + 2*2 = 5 collides with (3,1) -> 3 + 2
    bad = tor.TorusField(grid, tor.SPECTRAL, {(1, 2): 1.0, (3, 1): 1.0})
    with pytest.raises(ValueError):
        wit.bourgain_shift(bad, (1, 2), np.zeros(2))


def test_bourgain_shift_a_norm_preserved():
    rng = np.random.default_rng(12)
    grid = tor.TorusGrid(2, 8)  # one layer of T^2 with n = 1 blocks
    f = tor.random_bandlimited(grid, 2, rng)
    moduli = wit.default_shift_moduli(2, 2)
    out = wit.bourgain_shift(f, moduli, rng.uniform(-0.5, 0.5, 2))
    assert tor.a_norm(out) == pytest.approx(tor.a_norm(f), rel=1e-12)


def test_shift_commutation_bound_holds():
    rng = np.random.default_rng(3)
    sym = sy.make_symbol((1, 1))
    B, layers = 2, 2
    grid = tor.TorusGrid(2 * layers, 8)
    moduli = wit.default_shift_moduli(B, layers)
    for trial in range(5):
        f = tor.random_bandlimited(grid, B, rng)
        # last block must be mean-zero in its own variables for the paper's
        # setting; the commutation statement itself needs no such restriction
        tbar = rng.uniform(-0.5, 0.5, grid.n)
        rep = wit.shift_commutation(f, moduli, tbar, sym)
        assert rep.error <= rep.bound
        assert rep.deflection < 0.5


def test_default_moduli_increasing():
    m = wit.default_shift_moduli(3, 4)
    assert m[0] == 13
    assert all(b > a for a, b in zip(m, m[1:]))
