"""Multi-index machinery: homogeneous symbols, parity certificates,
family normalization, and the exact convex-combination diagnostic.

Multi-indices are plain tuples of nonnegative integers.  Coordinate sets
(parity sets) are frozensets of 0-based axis indices; user-facing report
code renders them 1-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

MultiIndex = tuple


def order(beta: Sequence[int]) -> int:
    """|beta| = sum of the entries."""
    return int(sum(beta))


def parse_multiindex(text: str) -> MultiIndex:
    try:
        entries = tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise ValueError(f"cannot parse multi-index {text!r}: {exc}") from None
    if not entries or any(e < 0 for e in entries):
        raise ValueError(f"multi-index entries must be nonnegative integers, got {text!r}")
    return entries


def add_unit(beta: MultiIndex, axis: int) -> MultiIndex:
    out = list(beta)
    out[axis] += 1
    return tuple(out)


@dataclass(frozen=True)
class HomogeneousSymbol:
    """The even-degree-zero homogeneous symbol k^beta / |k|^{|beta|}.

    Evaluates to 0 at k = 0 by convention; |value| <= 1 everywhere since
    |k^beta| <= |k|^{|beta|}.
    """

    beta: MultiIndex

    def __post_init__(self):
        if len(self.beta) == 0:
            raise ValueError("symbol index must have length >= 1")
        if any(b < 0 for b in self.beta):
            raise ValueError("symbol index entries must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.beta)

    @property
    def degree(self) -> int:
        return order(self.beta)

    def at(self, k) -> np.ndarray:
        """Evaluate on points of shape (..., n); works for real arguments too."""
        karr = np.asarray(k, dtype=float)
        if karr.shape[-1] != self.n:
            raise ValueError(f"points have dimension {karr.shape[-1]}, symbol has {self.n}")
        num = np.ones(karr.shape[:-1])
        for i, b in enumerate(self.beta):
            if b:
                num = num * karr[..., i] ** b
        r2 = np.sum(karr**2, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r2 > 0, num / r2 ** (self.degree / 2.0), 0.0)
        return out

    def __call__(self, k) -> float:
        return float(self.at(np.asarray(k, dtype=float)))

    def grad_at(self, x) -> np.ndarray:
        """Analytic gradient at points of shape (..., n); zero-filled at x = 0."""
        xarr = np.asarray(x, dtype=float)
        r2 = np.sum(xarr**2, axis=-1)
        m = self.at(xarr)
        out = np.zeros_like(xarr)
        with np.errstate(divide="ignore", invalid="ignore"):
            for i, b in enumerate(self.beta):
                term = -self.degree * m * xarr[..., i] / r2
                if b:
                    partial = np.ones(xarr.shape[:-1]) * b
                    for j, bj in enumerate(self.beta):
                        e = bj - 1 if j == i else bj
                        if e:
                            partial = partial * xarr[..., j] ** e
                    term = term + partial / r2 ** (self.degree / 2.0)
                out[..., i] = np.where(r2 > 0, term, 0.0)
        return out


def make_symbol(beta: Sequence[int]) -> HomogeneousSymbol:
    return HomogeneousSymbol(tuple(int(b) for b in beta))


def eigenvalue_on_sign_vector(symbol: HomogeneousSymbol, b: Sequence[int]) -> float:
    """m(b) = b^beta * n^{-|beta|/2} for b in {-1, 1}^n; requires even |beta|.

    Even order makes m(l*b) = m(b) for every nonzero integer l, which is what
    turns the lifted fields a_b into exact eigenfunctions.
    """
    if symbol.degree % 2 != 0:
        raise ValueError("eigenvalue on a sign line requires an even-order symbol")
    b = tuple(int(x) for x in b)
    if len(b) != symbol.n or any(x not in (-1, 1) for x in b):
        raise ValueError(f"b must lie in {{-1,1}}^{symbol.n}")
    sign = 1
    for bi, beta_i in zip(b, symbol.beta):
        if bi < 0 and beta_i % 2 == 1:
            sign = -sign
    return sign * float(symbol.n) ** (-symbol.degree / 2.0)


# -- parity machinery --------------------------------------------------------

def parity_certificate_holds(beta: MultiIndex, alphas: Sequence[MultiIndex],
                             parity_set: Iterable[int]) -> bool:
    """Check the defining property of a parity set F.

    All sums sum_{l in F} alpha^j_l must share one parity, different from the
    parity of sum_{l in F} beta_l; F must be a proper nonempty subset.
    """
    F = sorted(set(parity_set))
    n = len(beta)
    if not F or len(F) == n or any(i < 0 or i >= n for i in F):
        return False
    beta_par = sum(beta[i] for i in F) % 2
    alpha_pars = {sum(a[i] for i in F) % 2 for a in alphas}
    return len(alpha_pars) == 1 and beta_par not in alpha_pars


def find_parity_set(beta: MultiIndex, alphas: Sequence[MultiIndex]) -> Optional[frozenset]:
    """Brute-force the lexicographically smallest valid parity set, or None."""
    n = len(beta)
    if any(len(a) != n for a in alphas):
        raise ValueError("all multi-indices must have the same length")
    if n > 20:
        raise ValueError("parity-set search is limited to n <= 20")
    candidates = []
    for size in range(1, n):
        candidates.extend(itertools.combinations(range(n), size))
    for F in sorted(candidates):
        if parity_certificate_holds(beta, alphas, F):
            return frozenset(F)
    return None


@dataclass(frozen=True)
class DerivativeFamily:
    """A problem instance (beta, {alpha^j}, p) with an optional parity set."""

    beta: MultiIndex
    alphas: tuple
    p: float
    parity_set: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(int(b) for b in self.beta))
        object.__setattr__(self, "alphas", tuple(tuple(int(a) for a in al)
                                                 for al in self.alphas))
        if not self.alphas:
            raise ValueError("family needs at least one alpha index")
        n = len(self.beta)
        if any(len(a) != n for a in self.alphas):
            raise ValueError("beta and all alphas must share one dimension")
        if any(e < 0 for e in self.beta) or any(e < 0 for a in self.alphas for e in a):
            raise ValueError("multi-index entries must be nonnegative")
        for a in self.alphas:
            if order(a) != order(self.beta):
                raise ValueError(
                    f"|alpha|={order(a)} for alpha={a} differs from |beta|={order(self.beta)}")
        if not (1.0 < self.p < float("inf")):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if self.parity_set is not None:
            F = frozenset(int(i) for i in self.parity_set)
            if not parity_certificate_holds(self.beta, self.alphas, F):
                raise ValueError(f"parity set {sorted(F)} fails its certificate")
            object.__setattr__(self, "parity_set", F)

    @property
    def n(self) -> int:
        return len(self.beta)

    @property
    def N(self) -> int:
        return len(self.alphas)

    @property
    def is_normalized(self) -> bool:
        """True when |beta| is even and the parity-set sum of beta is odd."""
        if self.parity_set is None:
            return False
        s = sum(self.beta[i] for i in self.parity_set)
        return order(self.beta) % 2 == 0 and s % 2 == 1

    def with_parity_set(self) -> "DerivativeFamily":
        if self.parity_set is not None:
            return self
        F = find_parity_set(self.beta, self.alphas)
        if F is None:
            raise ValueError("family admits no parity set")
        return DerivativeFamily(self.beta, self.alphas, self.p, F)

    def symbol(self) -> HomogeneousSymbol:
        return make_symbol(self.beta)

    def alpha_symbols(self) -> tuple:
        return tuple(make_symbol(a) for a in self.alphas)

    def sign_vector(self) -> tuple:
        """b_F: entries -1 exactly on the parity set."""
        if self.parity_set is None:
            raise ValueError("family has no parity set")
        return tuple(-1 if i in self.parity_set else 1 for i in range(self.n))

    def to_dict(self) -> dict:
        return {
            "beta": list(self.beta),
            "alphas": [list(a) for a in self.alphas],
            "p": self.p,
            "parity_set": sorted(i + 1 for i in self.parity_set)
            if self.parity_set is not None else None,
        }


def normalize_family(fam: DerivativeFamily) -> DerivativeFamily:
    """Shift the family so that sum_F beta is odd and |beta| is even.

    Differentiating once more in direction e_s (s in F) and then e_t (t not
    in F) preserves both the equal-order constraint and the parity
    certificate; the smallest valid s and t are used for determinism.
    """
    fam = fam.with_parity_set()
    F = fam.parity_set
    if len(F) == 0 or len(F) == fam.n:
        raise ValueError("parity set must be a proper nonempty subset")
    beta, alphas = fam.beta, fam.alphas
    if sum(beta[i] for i in F) % 2 == 0:
        s = min(F)
        beta = add_unit(beta, s)
        alphas = tuple(add_unit(a, s) for a in alphas)
    if order(beta) % 2 == 1:
        t = min(set(range(fam.n)) - F)
        beta = add_unit(beta, t)
        alphas = tuple(add_unit(a, t) for a in alphas)
    return DerivativeFamily(beta, alphas, fam.p, F)


# -- convex combination diagnostic -------------------------------------------

def _solve_exact(cols, b):
    """Solve the overdetermined rational system [cols] * lam = b.

    Returns the unique solution as Fractions when the columns are linearly
    independent and the system is consistent, else None.
    """
    rows = len(b)
    s = len(cols)
    aug = [[Fraction(cols[j][i]) for j in range(s)] + [Fraction(b[i])]
           for i in range(rows)]
    rank = 0
    pivots = []
    for col in range(s):
        pivot = next((r for r in range(rank, rows) if aug[r][col] != 0), None)
        if pivot is None:
            return None  # dependent columns; covered by a smaller support
        aug[rank], aug[pivot] = aug[pivot], aug[rank]
        inv = aug[rank][col]
        aug[rank] = [x / inv for x in aug[rank]]
        for r in range(rows):
            if r != rank and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[rank])]
        pivots.append(col)
        rank += 1
    for r in range(rank, rows):
        if aug[r][s] != 0:
            return None  # inconsistent
    return [aug[i][s] for i in range(s)]


@dataclass(frozen=True)
class ConvexResult:
    feasible: bool
    weights: Optional[tuple] = None  # Fractions summing to 1 when feasible


def convex_combination_check(beta: MultiIndex, alphas: Sequence[MultiIndex]) -> ConvexResult:
    """Decide exactly whether beta = sum_j lam_j alpha^j with lam >= 0, sum = 1.

    Enumerates candidate supports by increasing size; any nonempty solution
    polytope is bounded (it sits inside the simplex), so it has a vertex
    supported on linearly independent columns, which this search visits.
    """
    n = len(beta)
    if any(len(a) != n for a in alphas):
        raise ValueError("all multi-indices must have the same length")
    N = len(alphas)
    if N < 1:
        raise ValueError("need at least one alpha")
    target = [int(x) for x in beta] + [1]
    columns = [[int(x) for x in a] + [1] for a in alphas]
    max_support = min(N, n + 1)
    for size in range(1, max_support + 1):
        for support in itertools.combinations(range(N), size):
            sol = _solve_exact([columns[j] for j in support], target)
            if sol is None or any(x < 0 for x in sol):
                continue
            weights = [Fraction(0)] * N
            for j, w in zip(support, sol):
                weights[j] = w
            return ConvexResult(True, tuple(weights))
    return ConvexResult(False, None)
