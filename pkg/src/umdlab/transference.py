"""Numerical certification of the transference machinery: the scaling limit
eps^{n/p} ||phi(eps .) f||_p -> ||phi||_p ||f||_p, the Poisson-summation
limit for sampled spectra, the pairing identity whose limit is the symbol
value, and the rescaled dyadic block symbol with its linear-in-eps bounds.

All R^n integrals are truncated to boxes sized from the Gaussian tail so the
truncation is reported and tiny; uniform midpoint quadrature uses spacing
tied to eps (h = eps/8), which is also what makes the measured sweep errors
trace the genuine convergence instead of collapsing to the float floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .symbols import HomogeneousSymbol
from .torus import SPECTRAL, TorusField, TorusGrid, lp_norm

QUADRATURE_BUDGET = 40_000_000  # total points per sweep value


@dataclass
class SweepResult:
    """Measured values of an eps-indexed quantity against its analytic limit."""

    epsilons: tuple
    values: tuple
    target: float
    errors: tuple          # absolute |value - target|
    tails: tuple           # reported truncation bounds, one per eps
    fitted_order: Optional[float]
    label: str = ""

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("sweep produced non-finite values")

    @property
    def rel_errors(self) -> tuple:
        scale = abs(self.target)
        if scale == 0:
            return self.errors
        return tuple(e / scale for e in self.errors)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "epsilons": list(self.epsilons),
            "values": list(self.values),
            "target": self.target,
            "errors": list(self.errors),
            "relErrors": list(self.rel_errors),
            "tails": list(self.tails),
            "fittedOrder": self.fitted_order,
        }


def _fit_order(epsilons, errors) -> Optional[float]:
    """Least-squares slope of log(error) against log(eps)."""
    pts = [(e, v) for e, v in zip(epsilons, errors) if v > 1e-14]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def _make_sweep(epsilons, values, target, tails, label) -> SweepResult:
    errors = tuple(abs(v - target) for v in values)
    return SweepResult(tuple(float(e) for e in epsilons), tuple(values), float(target),
                       errors, tuple(tails), _fit_order(epsilons, errors), label)


# -- Lemma 2.2-type scaling sweep ----------------------------------------------

GAUSS_TAIL_RADIUS = 3.2  # exp(-pi R^2) ~ 1e-14


def lemma22_sweep(f: TorusField, p: float, epsilons: Sequence[float],
                  target: Optional[float] = None,
                  h_factor: float = 8.0) -> SweepResult:
    """Sweep eps^{n/p} || phi(eps .) f ||_{L^p(R^n)} with phi the matched
    Gaussian e^{-pi |x|^2 / p}, so that |phi(eps x)|^p = e^{-pi eps^2 |x|^2}
    and ||phi||_p = 1.

    The integral is truncated to [-R/eps, R/eps]^n (R fixed by the Gaussian
    tail) and computed by midpoint quadrature with spacing eps/h_factor.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    n = f.grid.n
    eps_list = [float(e) for e in epsilons]
    target_val = target if target is not None else lp_norm(f, p, oversample=8)
    values, tails = [], []
    for eps in eps_list:
        h = eps / h_factor
        L = GAUSS_TAIL_RADIUS / eps
        count = int(math.ceil(2 * L / h))
        if count**n > QUADRATURE_BUDGET:
            raise ValueError(f"quadrature budget exceeded at eps={eps} (n={n})")
        x1 = -L + (np.arange(count) + 0.5) * h
        if n == 1:
            pts = x1[:, None]
        else:
            mesh = np.meshgrid(*([x1] * n), indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=-1)
        fv = f.evaluate_at(pts)
        weight = np.exp(-np.pi * eps**2 * np.sum(pts**2, axis=-1))
        integral = float(np.sum(weight * np.abs(fv) ** p)) * h**n
        values.append((eps**n * integral) ** (1.0 / p))
        # one-sided Gaussian mass beyond R, relative to the whole integral
        tail = 2 * n * math.exp(-math.pi * GAUSS_TAIL_RADIUS**2) \
            / (math.pi * GAUSS_TAIL_RADIUS)
        if tail > 1e-8:
            raise ValueError("quadrature tail bound exceeds tolerance")
        tails.append(tail)
    return _make_sweep(eps_list, values, target_val, tails,
                       label=f"scaling-limit p={p:g}")


# -- Lemma 2.3-type Poisson sweep ------------------------------------------------

@dataclass(frozen=True)
class SpectralProfile:
    """A 1D function with closed-form transform and closed-form L^p norms."""

    name: str
    fhat: Callable[[np.ndarray], np.ndarray]
    lp_norm_exact: Callable[[float], float]
    amplitude: float = 1.0

    def scaled(self, c: float) -> "SpectralProfile":
        base_fhat, base_norm = self.fhat, self.lp_norm_exact
        return SpectralProfile(
            f"{c:g}*{self.name}",
            lambda xi: c * base_fhat(xi),
            lambda p: abs(c) * base_norm(p),
            self.amplitude * c)


def profile_gaussian() -> SpectralProfile:
    # f(x) = e^{-pi x^2}; ||f||_p = p^{-1/(2p)}
    return SpectralProfile(
        "gauss",
        lambda xi: np.exp(-np.pi * np.asarray(xi, dtype=float) ** 2).astype(complex),
        lambda p: p ** (-1.0 / (2.0 * p)))


def profile_hermite() -> SpectralProfile:
    # f(x) = x e^{-pi x^2}; fhat(xi) = -i xi e^{-pi xi^2};
    # ||f||_p^p = Gamma((p+1)/2) (pi p)^{-(p+1)/2}
    def norm(p: float) -> float:
        return (math.gamma((p + 1) / 2.0) * (math.pi * p) ** (-(p + 1) / 2.0)) ** (1.0 / p)
    return SpectralProfile(
        "hermite",
        lambda xi: -1j * np.asarray(xi, dtype=float)
        * np.exp(-np.pi * np.asarray(xi, dtype=float) ** 2),
        norm)


def profile_cauchy() -> SpectralProfile:
    # f(x) = 1/(1+x^2); fhat(xi) = pi e^{-2 pi |xi|};
    # ||f||_p^p = sqrt(pi) Gamma(p - 1/2) / Gamma(p).  Decays like |x|^{-2}
    # only, so the Poisson-limit error is visibly algebraic in eps.
    def norm(p: float) -> float:
        return (math.sqrt(math.pi) * math.gamma(p - 0.5) / math.gamma(p)) ** (1.0 / p)
    return SpectralProfile(
        "cauchy",
        lambda xi: np.pi * np.exp(-2 * np.pi * np.abs(np.asarray(xi, dtype=float)))
        .astype(complex),
        norm)


PROFILES = {
    "gauss": profile_gaussian,
    "hermite": profile_hermite,
    "cauchy": profile_cauchy,
}


def _cutoff_for(profile: SpectralProfile, eps: float, tol: float) -> int:
    """Smallest K with the dropped coefficient-sum tail below tol, by doubling."""
    K = max(8, int(4.0 / eps))
    for _ in range(40):
        k = np.arange(0, 4 * K + 1)
        mags = np.abs(profile.fhat(eps * k))
        inside = mags[: K + 1].sum()
        tail = mags[K + 1:].sum()
        # crude geometric continuation of the sampled tail
        if tail <= tol * max(inside, 1e-300) and mags[-1] <= tol * max(inside, 1e-300):
            return K
        K *= 2
        if 2 * K + 4 > 2**22:
            raise ValueError(f"cutoff overflow at eps={eps}")
    raise ValueError(f"cutoff search failed at eps={eps}")


def lemma23_sweep(profile: SpectralProfile, p: float, epsilons: Sequence[float],
                  cutoff_tol: float = 1e-10, oversample: int = 2) -> SweepResult:
    """Sweep eps^{n/p'} || sum_k fhat(eps k) e_k ||_{L^p(T)} toward ||f||_p.

    The frequency cutoff is chosen per eps so the dropped coefficient tail
    is below cutoff_tol (reported); the torus norm uses the quadrature of
    ``lp_norm`` on a grid just above twice the cutoff.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    pprime = p / (p - 1.0)
    eps_list = [float(e) for e in epsilons]
    values, tails = [], []
    for eps in eps_list:
        K = _cutoff_for(profile, eps, cutoff_tol)
        M = 1 << (2 * K + 4 - 1).bit_length()
        grid = TorusGrid(1, M)
        k = np.arange(-K, K + 1)
        coeffs = np.asarray(profile.fhat(eps * k), dtype=complex)
        arr = np.zeros(M, dtype=complex)
        arr[k + M // 2] = coeffs
        fld = TorusField(grid, SPECTRAL, arr, K)
        norm = lp_norm(fld, p, oversample=oversample)
        values.append(eps ** (1.0 / pprime) * norm)
        tails.append(cutoff_tol)
    target = profile.lp_norm_exact(p)
    return _make_sweep(eps_list, values, target, tails,
                       label=f"poisson-limit {profile.name} p={p:g}")


# -- pairing identity -------------------------------------------------------------

def pairing_identity_check(symbol: HomogeneousSymbol, k: Sequence[int],
                           l: Sequence[int], epsilons: Sequence[float],
                           p: float = 2.0, radius: float = 2.0,
                           h_eta: float = 1.0 / 16.0) -> SweepResult:
    """Sweep (1/eps^n) integral of m(xi) phihat((xi-k)/eps) psicheck((xi-l)/eps).

    After xi = eps eta + k the quadrature runs on an eta grid of spacing
    h_eta (so the xi spacing is eps h_eta <= eps/8), centered where the
    Gaussian product concentrates.  The limit is m(k) when k = l, else 0.
    """
    k = tuple(int(x) for x in k)
    l = tuple(int(x) for x in l)
    n = symbol.n
    if len(k) != n or len(l) != n:
        raise ValueError("frequencies must match the symbol dimension")
    if all(x == 0 for x in k) or all(x == 0 for x in l):
        raise ValueError("k and l must be nonzero")
    pprime = p / (p - 1.0)
    eps_list = [float(e) for e in epsilons]
    target = float(symbol.at(np.array(k, dtype=float))) if k == l else 0.0
    values, tails = [], []
    for eps in eps_list:
        delta = (np.array(k, dtype=float) - np.array(l, dtype=float)) / eps
        center = -pprime * delta / (p + pprime)
        count = int(math.ceil(2 * radius / h_eta))
        ax = [c - radius + (np.arange(count) + 0.5) * h_eta for c in center]
        mesh = np.meshgrid(*ax, indexing="ij")
        eta = np.stack(mesh, axis=-1)
        phihat = p ** (n / 2.0) * np.exp(-np.pi * p * np.sum(eta**2, axis=-1))
        shifted = eta + delta
        psicheck = pprime ** (n / 2.0) * np.exp(-np.pi * pprime * np.sum(shifted**2, axis=-1))
        sym = symbol.at(eps * eta + np.array(k, dtype=float))
        values.append(float(np.sum(sym * phihat * psicheck)) * h_eta**n)
        tails.append(math.exp(-math.pi * (p + pprime) * radius**2))
    return _make_sweep(eps_list, values, target, tails,
                       label=f"pairing k={k} l={l}")


# -- dyadic block symbol ------------------------------------------------------------

def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp(-1/t) glue between."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.clip(t, 1e-300, None)), 0.0)
        b = np.where(1 - t > 0, np.exp(-1.0 / np.clip(1 - t, 1e-300, None)), 0.0)
    return a / (a + b)


def theta0(xi_norm: np.ndarray) -> np.ndarray:
    """Radial cutoff: 1 inside |xi| <= 1, 0 outside |xi| >= 2, smooth glue."""
    r = np.asarray(xi_norm, dtype=float)
    return _smoothstep(2.0 - r)


def _theta_l(r: np.ndarray, l: int) -> np.ndarray:
    if l < 0:
        return np.zeros_like(r)
    if l == 0:
        return theta0(r)
    return theta0(r / 2.0**l) - theta0(r / 2.0 ** (l - 1))


def big_theta(r: np.ndarray, l: int) -> np.ndarray:
    """Theta_l = theta_{l-1} + theta_l + theta_{l+1}: equals 1 on supp theta_l."""
    return _theta_l(r, l - 1) + _theta_l(r, l) + _theta_l(r, l + 1)


@dataclass(frozen=True)
class BlockBounds:
    pointwise: float      # sup |Mtilde|
    derivative: float     # max over 1 <= |gamma| <= n+1 of sup |eta|^{|gamma|} |d^gamma Mtilde|
    scale: float          # 2^l eps, the predicted linear scale

    def to_dict(self) -> dict:
        return {"pointwise": self.pointwise, "derivative": self.derivative,
                "scale": self.scale}


def _iter_gammas(n: int, max_order: int):
    def rec(prefix, remaining, left):
        if remaining == 0:
            yield tuple(prefix)
            return
        for v in range(left + 1):
            yield from rec(prefix + [v], remaining - 1, left - v)
    for g in rec([], n, max_order):
        if 0 < sum(g) <= max_order:
            yield g


def dyadic_block_bound(symbol: HomogeneousSymbol, k: Sequence[int], block: int,
                       eps: float, points: int = 129) -> BlockBounds:
    """Measure the rescaled block symbol [m(2^l eps eta + k) - m(k)] Theta_l(2^l eta).

    Valid under the proof constraint eps < 2^{-l-3}; both the sup and the
    Mihlin-type derivative sups (central differences, |gamma| <= n+1) scale
    linearly in 2^l eps.
    """
    if block < 0:
        raise ValueError("block index must be >= 0")
    if not eps < 2.0 ** (-block - 3):
        raise ValueError(f"requires eps < 2^(-l-3) = {2.0**(-block-3):g}, got {eps}")
    n = symbol.n
    k = np.array([float(x) for x in k])
    if len(k) != n:
        raise ValueError("frequency must match the symbol dimension")
    ax = np.linspace(-4.0, 4.0, points)
    h = ax[1] - ax[0]
    mesh = np.meshgrid(*([ax] * n), indexing="ij")
    eta = np.stack(mesh, axis=-1)
    scale = 2.0**block * eps
    mk = float(symbol.at(k))
    cutoff = big_theta(2.0**block * np.sqrt(np.sum(eta**2, axis=-1)), block)
    mt = (symbol.at(scale * eta + k) - mk) * cutoff
    pointwise = float(np.max(np.abs(mt)))
    eta_norm = np.sqrt(np.sum(eta**2, axis=-1))
    deriv = 0.0
    for gamma in _iter_gammas(n, n + 1):
        d = mt
        for ax_i, g in enumerate(gamma):
            for _ in range(g):
                d = np.gradient(d, h, axis=ax_i)
        order_g = sum(gamma)
        deriv = max(deriv, float(np.max(eta_norm**order_g * np.abs(d))))
    return BlockBounds(pointwise, deriv, scale)


def dyadic_block_sweep(symbol: HomogeneousSymbol, k: Sequence[int], block: int,
                       epsilons: Sequence[float], points: int = 129) -> dict:
    """Run dyadic_block_bound over an eps sweep and fit both bounds linearly.

    Returns the per-eps bounds plus least-squares slope/intercept/R^2 of the
    fits against the predicted scale 2^l eps.
    """
    eps_list = [float(e) for e in epsilons]
    bounds = [dyadic_block_bound(symbol, k, block, e, points) for e in eps_list]
    out = {"epsilons": eps_list, "block": block,
           "pointwise": [b.pointwise for b in bounds],
           "derivative": [b.derivative for b in bounds],
           "scale": [b.scale for b in bounds]}
    for key in ("pointwise", "derivative"):
        x = np.array(out["scale"])
        y = np.array(out[key])
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
        out[f"{key}_fit"] = {"slope": float(slope), "intercept": float(intercept),
                             "r2": r2}
    return out
