"""Exact Paley-Walsh martingale transform computations on 2^r-atom spaces.

Atoms are indexed by integers a in [0, 2^r); bit i of a encodes the sign
eps_{i+1} = 1 - 2*bit_i(a), so atom 0 is the all-plus path.  The l-th
difference table depends on the first l-1 signs and is indexed by the low
l-1 bits.  Atom weights are the exact dyadic 2^{-r}; p-th power sums use
exactly rounded summation (math.fsum) followed by a single root, and the
p = 2 case has a fully rational path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .torus import TorusGrid, periodic_sign


MAX_STEPS = 14  # 2^14 atoms


class WalshMartingale:
    """A finite Paley-Walsh martingale difference sequence."""

    def __init__(self, tables: Sequence[np.ndarray]):
        self.tables = [np.asarray(t, dtype=float).ravel() for t in tables]
        self.r = len(self.tables)
        if self.r < 1:
            raise ValueError("need at least one step")
        if self.r > MAX_STEPS:
            raise ValueError(f"at most {MAX_STEPS} steps are supported")
        for l, t in enumerate(self.tables):
            if t.shape != (2**l,):
                raise ValueError(f"table {l + 1} must have 2^{l} entries, got {t.shape}")

    @property
    def atoms(self) -> int:
        return 2**self.r

    def increments(self) -> np.ndarray:
        """Array of shape (r, 2^r): the l-th row is eps_l * d_l over atoms."""
        a = np.arange(self.atoms)
        rows = []
        for l, t in enumerate(self.tables):
            eps = 1.0 - 2.0 * ((a >> l) & 1)
            rows.append(eps * t[a & ((1 << l) - 1)])
        return np.array(rows)

    def signed_sum(self, signs: Optional[Sequence[int]] = None) -> np.ndarray:
        inc = self.increments()
        if signs is None:
            return inc.sum(axis=0)
        s = np.asarray(signs, dtype=float)
        if s.shape != (self.r,):
            raise ValueError("signs must have one entry per step")
        return (s[:, None] * inc).sum(axis=0)

    def is_zero(self) -> bool:
        return all(not np.any(t) for t in self.tables)


def transform_ratio(m: WalshMartingale, signs: Sequence[int], p: float) -> float:
    """|| sum sigma_l eps_l d_l ||_p / || sum eps_l d_l ||_p over the atoms.

    Computed exactly over all 2^r atoms; p = 2 uses rational arithmetic
    (floats are dyadic rationals) and returns exactly 1.0 there.
    """
    if p <= 1 or not math.isfinite(p):
        raise ValueError(f"p must lie in (1, inf), got {p}")
    if m.is_zero():
        raise ValueError("zero martingale has no transform ratio")
    signs = [int(s) for s in signs]
    if len(signs) != m.r or any(s not in (-1, 1) for s in signs):
        raise ValueError("signs must be a vector in {-1,1}^r")
    if p == 2:
        num2, den2 = transform_ratio_squared_exact(m, signs)
        return float(math.sqrt(num2 / den2))
    num = m.signed_sum(signs)
    den = m.signed_sum()
    num_p = math.fsum(np.abs(num) ** p)
    den_p = math.fsum(np.abs(den) ** p)
    if den_p == 0:
        raise ValueError("martingale sum vanishes on every atom")
    return (num_p / den_p) ** (1.0 / p)


def transform_ratio_squared_exact(m: WalshMartingale,
                                  signs: Sequence[int]) -> Tuple[Fraction, Fraction]:
    """Exact rational (numerator, denominator) of the squared p = 2 ratio."""
    a_range = range(m.atoms)
    tables = [[Fraction(float(x)) for x in t] for t in m.tables]
    num = Fraction(0)
    den = Fraction(0)
    for a in a_range:
        s_num = Fraction(0)
        s_den = Fraction(0)
        for l in range(m.r):
            eps = 1 if ((a >> l) & 1) == 0 else -1
            d = tables[l][a & ((1 << l) - 1)]
            s_den += eps * d
            s_num += signs[l] * eps * d
        num += s_num * s_num
        den += s_den * s_den
    if den == 0:
        raise ValueError("martingale sum vanishes on every atom")
    return num, den


def burkholder_ceiling(p: float) -> float:
    """The sharp scalar martingale-transform constant p* - 1."""
    if not (1.0 < p < float("inf")):
        raise ValueError(f"p must lie in (1, inf), got {p}")
    return max(p, p / (p - 1.0)) - 1.0


def walsh_coefficients(table: np.ndarray, k: int) -> dict:
    """Walsh expansion of a function of (eps_1..eps_k) given as a table.

    Returns {frozenset S: coefficient} with d(eps) = sum_S c_S prod_{i in S} eps_i;
    the table is indexed by the low-bits convention above.
    """
    t = np.asarray(table, dtype=float).ravel()
    if t.shape != (2**k,):
        raise ValueError(f"table must have 2^{k} entries")
    out = {}
    idx = np.arange(2**k)
    for bits in range(2**k):
        S = frozenset(i for i in range(k) if (bits >> i) & 1)
        chi = np.ones(2**k)
        for i in S:
            chi *= 1.0 - 2.0 * ((idx >> i) & 1)
        c = float(np.dot(chi, t)) / 2**k
        if c != 0.0:
            out[S] = c
    return out


@dataclass
class SearchResult:
    best_ratio: float
    martingale: WalshMartingale
    signs: tuple
    evaluations: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "bestRatio": self.best_ratio,
            "signs": list(self.signs),
            "tables": [t.tolist() for t in self.martingale.tables],
            "evaluations": self.evaluations,
            "seed": self.seed,
        }


def umd_lower_search(r: int, p: float, budget: int = 10_000, seed: int = 0,
                     starts: int = 4) -> SearchResult:
    """Empirical lower bound on the scalar UMD constant at exponent p.

    Coordinate ascent over the sign vector alternates with multiplicative
    perturbation of the difference tables, restarted from ``starts``
    independent seeds; every reported ratio is exactly evaluated, so the
    result is always a valid lower bound.  Deterministic given the seed.
    """
    if r < 1 or r > MAX_STEPS:
        raise ValueError(f"r must lie in 1..{MAX_STEPS}")
    if budget < 1:
        raise ValueError("budget must be positive")
    seed_children = np.random.SeedSequence(seed).spawn(starts)
    best: Optional[SearchResult] = None
    per_start = max(1, budget // starts)
    total_evals = 0
    for child in seed_children:
        rng = np.random.default_rng(child)
        tables = [rng.standard_normal(2**l) for l in range(r)]
        signs = [int(s) for s in np.where(rng.random(r) < 0.5, -1, 1)]
        m = WalshMartingale(tables)
        cur = transform_ratio(m, signs, p)
        evals = 1
        scale = 0.5
        while evals < per_start:
            improved = False
            for l in range(r):
                if evals >= per_start:
                    break
                flipped = list(signs)
                flipped[l] = -flipped[l]
                v = transform_ratio(m, flipped, p)
                evals += 1
                if v > cur:
                    cur, signs = v, flipped
                    improved = True
            trials = 0
            while trials < r and evals < per_start:
                candidate = [t * (1.0 + scale * rng.standard_normal(t.shape))
                             for t in tables]
                m2 = WalshMartingale(candidate)
                if m2.is_zero():
                    trials += 1
                    continue
                v = transform_ratio(m2, signs, p)
                evals += 1
                trials += 1
                if v > cur:
                    cur, m, tables = v, m2, candidate
                    improved = True
            if not improved:
                scale *= 0.5
                if scale < 1e-4:
                    break
        total_evals += evals
        if best is None or cur > best.best_ratio:
            best = SearchResult(cur, m, tuple(signs), 0, seed)
    best.evaluations = total_evals
    return best


# -- sign-field distribution checks -------------------------------------------

@dataclass
class SignFieldReport:
    counts: list            # per vector: (count of +1, count of -1)
    balanced: bool          # every marginal is exactly M^n / 2 each
    joint_uniform: bool     # every sign pattern gets M^{rn} / 2^r points
    total_points: int

    def to_dict(self) -> dict:
        return {
            "counts": [list(c) for c in self.counts],
            "balanced": self.balanced,
            "jointUniform": self.joint_uniform,
            "totalPoints": self.total_points,
        }


def sign_field_check(bs: Sequence[Sequence[int]], grid: TorusGrid) -> SignFieldReport:
    """Count the signs of b . t over the offset grid, exactly.

    Each sgn(b_l . t_l) must take the values +1 and -1 on exactly half the
    grid points (the half-period shift t_1 -> t_1 + 1/2 is a sign-flipping
    involution of the grid), and since the layers live on disjoint
    coordinate blocks the joint distribution is the product of marginals.
    """
    if not grid.offset:
        raise ValueError("sign sampling requires the half-cell offset grid "
                         "(b.t can land on a sign jump otherwise)")
    mesh = grid.meshgrid()
    counts = []
    for b in bs:
        b = tuple(int(x) for x in b)
        if len(b) != grid.n or any(x not in (-1, 1) for x in b):
            raise ValueError(f"each b must lie in {{-1,1}}^{grid.n}")
        dot = sum(bi * ti for bi, ti in zip(b, mesh))
        sg = periodic_sign(dot)
        plus = int(np.count_nonzero(sg > 0))
        counts.append((plus, grid.size - plus))
    balanced = all(c[0] == c[1] == grid.size // 2 for c in counts)
    r = len(bs)
    total = grid.size**r
    if total <= 2**20:
        signs = []
        for b in bs:
            dot = sum(int(bi) * ti for bi, ti in zip(b, mesh))
            signs.append(periodic_sign(dot).ravel())
        joint_uniform = True
        target = total // 2**r
        for pattern in range(2**r):
            per_layer = [int(np.count_nonzero(
                signs[l] == (1.0 if (pattern >> l) & 1 == 0 else -1.0)))
                for l in range(r)]
            if int(np.prod(per_layer)) != target:
                joint_uniform = False
        if r == 2:
            # brute-force one pattern to guard the product-counting argument
            brute = int(np.count_nonzero(np.outer(signs[0] > 0, signs[1] > 0)))
            if brute != target:
                joint_uniform = False
    else:
        # layers occupy disjoint coordinate blocks of the product grid, so
        # joint counts are exactly the products of the marginal counts
        joint_uniform = balanced
    return SignFieldReport(counts, balanced, joint_uniform, total)
