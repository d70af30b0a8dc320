import itertools
from fractions import Fraction

import numpy as np
import pytest

from umdlab import symbols as sy


def test_make_symbol_values():
    s = sy.make_symbol((1, 1))
    assert s((1, 1)) == pytest.approx(0.5)
    assert s((3, 3)) == pytest.approx(0.5)
    assert sy.make_symbol((2, 0))((0, 5)) == 0.0
    assert s((0, 0)) == 0.0
    with pytest.raises(ValueError):
        sy.make_symbol(())


def test_symbol_bounded_homogeneous_even():
    for beta in [(1, 1), (2, 0), (3, 1), (2, 2), (1, 1, 2)]:
        s = sy.make_symbol(beta)
        n = len(beta)
        for k in itertools.product(range(-8, 9), repeat=n):
            if all(x == 0 for x in k):
                continue
            v = s(k)
            assert abs(v) <= 1.0 + 1e-15
            for lam in range(1, 11):
                assert s(tuple(lam * x for x in k)) == pytest.approx(v, abs=1e-13)
            if sum(beta) % 2 == 0:
                assert s(tuple(-x for x in k)) == pytest.approx(v, abs=1e-14)


def test_eigenvalue_on_sign_vector():
    s11 = sy.make_symbol((1, 1))
    assert sy.eigenvalue_on_sign_vector(s11, (1, 1)) == pytest.approx(0.5)
    assert sy.eigenvalue_on_sign_vector(s11, (1, -1)) == pytest.approx(-0.5)
    s20 = sy.make_symbol((2, 0))
    assert sy.eigenvalue_on_sign_vector(s20, (1, -1)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sy.eigenvalue_on_sign_vector(sy.make_symbol((1, 0)), (1, 1))
    with pytest.raises(ValueError):
        sy.eigenvalue_on_sign_vector(s11, (1, 2))


def test_symbol_gradient_matches_fd():
    rng = np.random.default_rng(7)
    for beta in [(1, 1), (2, 0), (2, 1, 1)]:
        s = sy.make_symbol(beta)
        n = len(beta)
        x = rng.uniform(0.5, 2.0, size=n) * rng.choice([-1, 1], size=n)
        g = s.grad_at(x)
        h = 1e-6
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            fd = (s(x + e) - s(x - e)) / (2 * h)
            assert g[i] == pytest.approx(fd, abs=1e-8)


def test_find_parity_set_examples():
    assert sy.find_parity_set((1, 1), [(2, 0), (0, 2)]) == frozenset({0})
    assert sy.find_parity_set((2, 0), [(2, 0)]) is None
    assert sy.find_parity_set((3, 1), [(4, 0), (0, 4)]) == frozenset({0})
    with pytest.raises(ValueError):
        sy.find_parity_set((1, 1), [(1, 1, 1)])


def test_parity_set_recheck_invariant():
    rng = np.random.default_rng(2)
    found = 0
    while found < 25:
        n = int(rng.integers(2, 5))
        beta = tuple(int(x) for x in rng.integers(0, 4, size=n))
        if sum(beta) == 0:
            continue
        m = sum(beta)
        alphas = []
        for _ in range(int(rng.integers(1, 4))):
            a = [0] * n
            left = m
            for i in range(n - 1):
                a[i] = int(rng.integers(0, left + 1))
                left -= a[i]
            a[-1] = left
            alphas.append(tuple(a))
        F = sy.find_parity_set(beta, alphas)
        if F is None:
            continue
        found += 1
        assert sy.parity_certificate_holds(beta, alphas, F)
        # the certificate really separates parities term by term
        for j, a in enumerate(alphas):
            sa = sum(a[i] for i in F) % 2
            sb = sum(beta[i] for i in F) % 2
            assert sa != sb


def test_family_validation():
    with pytest.raises(ValueError):
        sy.DerivativeFamily((1, 1), ((1, 0),), 2.0)  # order mismatch
    with pytest.raises(ValueError):
        sy.DerivativeFamily((1, 1), ((2, 0),), 1.0)  # p out of range
    with pytest.raises(ValueError):
        sy.DerivativeFamily((2, 0), ((2, 0),), 2.0, frozenset({0}))  # bad F
    fam = sy.DerivativeFamily((1, 1), ((2, 0), (0, 2)), 2.0)
    assert fam.with_parity_set().parity_set == frozenset({0})


def test_normalize_family_cases():
    fam = sy.DerivativeFamily((1, 1), ((2, 0), (0, 2)), 2.0, frozenset({0}))
    out = sy.normalize_family(fam)
    assert out.beta == (1, 1) and out.alphas == ((2, 0), (0, 2))
    # two-step case: parity sum even, then odd order after the first bump
    fam2 = sy.DerivativeFamily((2, 1), ((3, 0), (1, 2)), 2.0, frozenset({0}))
    out2 = sy.normalize_family(fam2)
    assert out2.beta == (3, 1)
    assert out2.alphas == ((4, 0), (2, 2))
    assert out2.is_normalized
    # already normalized in n = 3
    fam3 = sy.DerivativeFamily((1, 0, 1), ((2, 0, 0), (0, 0, 2)), 2.0, frozenset({0}))
    out3 = sy.normalize_family(fam3)
    assert out3.beta == (1, 0, 1)
    with pytest.raises(ValueError):
        sy.normalize_family(sy.DerivativeFamily((2, 0), ((2, 0),), 2.0))


def test_normalize_idempotent_random():
    rng = np.random.default_rng(4)
    done = 0
    while done < 40:
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 6))
        def draw():
            a = [0] * n
            left = m
            for i in range(n - 1):
                a[i] = int(rng.integers(0, left + 1))
                left -= a[i]
            a[-1] = left
            return tuple(a)
        beta = draw()
        alphas = tuple({draw() for _ in range(int(rng.integers(1, 4)))})
        if sy.find_parity_set(beta, alphas) is None:
            continue
        fam = sy.DerivativeFamily(beta, alphas, 2.0).with_parity_set()
        out = sy.normalize_family(fam)
        assert out.is_normalized
        again = sy.normalize_family(out)
        assert again.beta == out.beta and again.alphas == out.alphas
        assert out.parity_set == fam.parity_set
        done += 1


def test_convex_combination_examples():
    r = sy.convex_combination_check((1, 1), [(2, 0), (0, 2)])
    assert r.feasible and r.weights == (Fraction(1, 2), Fraction(1, 2))
    assert not sy.convex_combination_check((2, 0), [(0, 2)]).feasible
    r3 = sy.convex_combination_check((1, 1, 2), [(4, 0, 0), (0, 4, 0), (0, 0, 4)])
    assert r3.feasible
    assert r3.weights == (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2))


def test_convex_weights_reconstruct():
    rng = np.random.default_rng(8)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        N = int(rng.integers(1, 4))
        alphas = [tuple(int(x) for x in rng.integers(0, 5, size=n)) for _ in range(N)]
        beta = tuple(int(x) for x in rng.integers(0, 5, size=n))
        r = sy.convex_combination_check(beta, alphas)
        if r.feasible:
            assert sum(r.weights) == 1
            assert all(w >= 0 for w in r.weights)
            for i in range(n):
                assert sum(w * a[i] for w, a in zip(r.weights, alphas)) == beta[i]
