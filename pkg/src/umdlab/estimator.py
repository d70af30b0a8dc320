"""Maximization of R(f) = ||T_m f||_p / sum_j ||T_mj f||_p over mean-zero
bandlimited torus fields, by multi-start projected gradient ascent, plus the
exact single-frequency brute-force oracle.

The best value found is a lower bound for the best constant K of the
derivative-family inequality; the paper-side upper bound (p* - 1)/2 is
attached for the mixed-second-derivative family where it applies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .symbols import DerivativeFamily
from .torus import (SPECTRAL, TorusField, TorusGrid, _axis_phase, mode,
                    project_mean_zero, random_bandlimited)
from .witness import lift_to_torus, square_wave_poly


def _pstar(p: float) -> float:
    return max(p, p / (p - 1.0))


@dataclass
class SolverOptions:
    starts: int = 8
    max_iter: int = 2000
    tol: float = 1e-9
    seed: int = 0
    oversample: int = 4
    eps_grad: Optional[float] = None     # relative smoothing for p < 2
    patience: int = 20
    step0: float = 0.5
    max_halvings: int = 30
    scan_range: int = 8
    warm_start: Optional[TorusField] = None

    def to_dict(self) -> dict:
        return {
            "starts": self.starts, "maxIter": self.max_iter, "tol": self.tol,
            "seed": self.seed, "oversample": self.oversample,
            "epsGrad": self.eps_grad, "patience": self.patience,
            "step0": self.step0, "maxHalvings": self.max_halvings,
            "scanRange": self.scan_range,
            "warmStart": self.warm_start is not None,
        }


class RatioProblem:
    """Caches symbol meshes and fine-grid FFT plumbing for one (family, grid, p)."""

    def __init__(self, fam: DerivativeFamily, grid: TorusGrid,
                 p: Optional[float] = None, oversample: int = 4):
        if grid.n != fam.n:
            raise ValueError("grid dimension does not match the family")
        self.fam = fam
        self.grid = grid
        self.p = fam.p if p is None else float(p)
        if self.p <= 1:
            raise ValueError("p must exceed 1")
        self.oversample = int(oversample)
        self.M = grid.M
        self.Mf = self.oversample * grid.M
        self.fine_grid = TorusGrid(grid.n, self.Mf, grid.offset)
        if self.fine_grid.size > 2**24:
            raise ValueError("oversampled grid is too large")
        k1 = grid.axis_freqs()
        meshes = np.meshgrid(*([k1] * grid.n), indexing="ij")
        karr = np.stack(meshes, axis=-1)
        self.m_mesh = fam.symbol().at(karr)
        self.mj_meshes = [s.at(karr) for s in fam.alpha_symbols()]
        # all N+1 multipliers stacked so transforms run as one batched FFT
        self._all_meshes = np.stack([self.m_mesh] + self.mj_meshes)
        self._fine_phase = _axis_phase(self.fine_grid)
        self._off = (self.Mf - self.M) // 2
        self._center = (self.M // 2,) * grid.n
        self._nyq_mask = self._nyquist_mask()
        self._spatial_axes = tuple(range(1, grid.n + 1))

    def _nyquist_mask(self) -> np.ndarray:
        mask = np.ones((self.M,) * self.grid.n, dtype=bool)
        for ax in range(self.grid.n):
            idx = [slice(None)] * self.grid.n
            idx[ax] = 0  # the unmatched -M/2 plane
            mask[tuple(idx)] = False
        return mask

    def project(self, spec: np.ndarray) -> np.ndarray:
        out = spec * self._nyq_mask
        out[self._center] = 0.0
        return out

    def _fine_physical_batch(self, specs: np.ndarray) -> np.ndarray:
        """Inverse transform a batch (B, M, .., M) onto the fine grid."""
        B = specs.shape[0]
        out = np.zeros((B,) + (self.Mf,) * self.grid.n, dtype=complex)
        sl = (slice(None),) + tuple(slice(self._off, self._off + self.M)
                                    for _ in range(self.grid.n))
        out[sl] = specs
        conj = self._fine_phase.conj()
        for ax in self._spatial_axes:
            shape = [1] * (self.grid.n + 1)
            shape[ax] = -1
            out *= conj.reshape(shape)
        out = np.fft.ifftn(np.fft.ifftshift(out, axes=self._spatial_axes),
                           axes=self._spatial_axes)
        out *= self.fine_grid.size
        return out

    def _fine_forward_unpad_batch(self, w: np.ndarray) -> np.ndarray:
        raw = np.fft.fftshift(np.fft.fftn(w, axes=self._spatial_axes),
                              axes=self._spatial_axes) / self.fine_grid.size
        for ax in self._spatial_axes:
            shape = [1] * (self.grid.n + 1)
            shape[ax] = -1
            raw *= self._fine_phase.reshape(shape)
        sl = (slice(None),) + tuple(slice(self._off, self._off + self.M)
                                    for _ in range(self.grid.n))
        return raw[sl]

    def _norms_batch(self, u: np.ndarray) -> np.ndarray:
        means = np.mean(np.abs(u) ** self.p, axis=self._spatial_axes)
        return means ** (1.0 / self.p)

    def _split(self, norms):
        num = float(norms[0])
        dens = [float(v) for v in norms[1:]]
        den = math.fsum(dens)
        if den == 0.0:
            dead = [j + 1 for j, v in enumerate(dens) if v == 0.0]
            raise ValueError(
                f"every alpha multiplier annihilates the field (j = {dead}); "
                "the ratio objective is undefined")
        return num, den

    def value(self, spec: np.ndarray, parts: bool = False):
        if self.p == 2:
            g = self._all_meshes * spec[None]
            norms = np.sqrt(np.sum(np.abs(g) ** 2, axis=self._spatial_axes))
        else:
            u = self._fine_physical_batch(self._all_meshes * spec[None])
            norms = self._norms_batch(u)
        num, den = self._split(norms)
        if parts:
            return num / den, num, list(norms[1:])
        return num / den

    def value_and_grad(self, spec: np.ndarray, eps_rel: float = 0.0):
        """Objective and its gradient with respect to the spectral coefficients.

        The gradient convention pairs as dR = Re <grad, d spec>; mean-zero and
        Nyquist projections are applied to the result.  At p = 2 the
        oversampled quadrature equals the Parseval sum exactly (the fine grid
        resolves |f|^2 for bandlimited f), so the spectral formula is used.
        """
        if self.p == 2:
            return self._value_and_grad_p2(spec)
        u = self._fine_physical_batch(self._all_meshes * spec[None])
        norms = self._norms_batch(u)
        num, den = self._split(norms)
        p = self.p
        # dual densities |u|^{p-2} u / norm^{p-1}, smoothed below p = 2
        absu2 = np.abs(u) ** 2
        if p < 2 and eps_rel > 0:
            eps = eps_rel * np.max(np.abs(u), axis=self._spatial_axes, keepdims=True)
            w = (absu2 + eps**2) ** ((p - 2) / 2.0) * u
        elif p == 2:
            w = u.copy()
        else:
            w = absu2 ** ((p - 2) / 2.0) * u
        safe = np.where(norms > 0, norms, 1.0) ** (p - 1.0)
        w /= safe.reshape((-1,) + (1,) * self.grid.n)
        w[norms == 0] = 0.0
        G = self._all_meshes * self._fine_forward_unpad_batch(w)
        g_num = G[0]
        g_den = G[1:].sum(axis=0)
        val = num / den
        grad = (g_num * den - num * g_den) / den**2
        grad = self.project(grad)
        if not (np.isfinite(val) and np.all(np.isfinite(grad))):
            raise FloatingPointError(
                f"non-finite intermediates in the ratio gradient at p={self.p} "
                f"(value={val}, |f|_2={np.linalg.norm(spec):.3e})")
        return val, grad


def _as_spec_array(f: TorusField, grid: TorusGrid) -> np.ndarray:
    from .torus import forward_transform
    g = f if f.representation == SPECTRAL else forward_transform(f)
    if g.grid.M == grid.M and not g.is_sparse:
        return g.values.copy()
    out = np.zeros(grid.shape, dtype=complex)
    half = grid.M // 2
    for k, c in g.spectral_items():
        if any(abs(ki) > grid.nyquist for ki in k):
            raise ValueError(f"frequency {k} does not fit the target grid")
        out[tuple(ki + half for ki in k)] = c
    return out


def ratio_objective(fam: DerivativeFamily, f: TorusField, p: Optional[float] = None,
                    oversample: int = 4) -> float:
    """R(f) = ||T_m f||_p / sum_j ||T_mj f||_p (0-homogeneous in f)."""
    problem = RatioProblem(fam, _grid_of(f), p, oversample)
    spec = _checked_spec(f, problem)
    return problem.value(spec)


def ratio_gradient(fam: DerivativeFamily, f: TorusField, p: Optional[float] = None,
                   oversample: int = 4, eps_grad: Optional[float] = None) -> TorusField:
    """Gradient of the ratio with respect to the physical values of f.

    Pulled back through each multiplier by the (real) adjoint symbol; the
    dual density |g|^{p-2} g is smoothed to (|g|^2 + eps^2)^{(p-2)/2} g for
    p < 2.  The result is mean-zero and pairs as dR = Re <grad, df>.
    """
    from .torus import inverse_transform
    problem = RatioProblem(fam, _grid_of(f), p, oversample)
    eps_rel = eps_grad if eps_grad is not None else (1e-8 if problem.p < 2 else 0.0)
    spec = _checked_spec(f, problem)
    _, grad_spec = problem.value_and_grad(spec, eps_rel)
    grid = problem.grid
    grad_field = TorusField(grid, SPECTRAL, grad_spec / grid.size)
    return inverse_transform(grad_field)


def _grid_of(f: TorusField) -> TorusGrid:
    return f.grid


def _checked_spec(f: TorusField, problem: RatioProblem) -> np.ndarray:
    spec = _as_spec_array(f, problem.grid)
    scale = float(np.max(np.abs(spec)))
    if scale == 0.0:
        raise ValueError("field is identically zero")
    if abs(spec[problem._center]) > 1e-13 * scale:
        raise ValueError("field must be mean-zero (coefficient at 0 vanishes)")
    return problem.project(spec)


# -- single-frequency oracle ---------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    ratio: Optional[Fraction]   # exact value; None when the sup is infinite
    freq: tuple

    @property
    def value(self) -> float:
        return math.inf if self.ratio is None else float(self.ratio)


def single_frequency_scan(fam: DerivativeFamily, kmax: int = 8) -> ScanResult:
    """Maximize |m(k)| / sum_j |m_j(k)| over 0 < |k|_inf <= kmax, exactly.

    On a single mode e_k every L^p norm is |coefficient|, so the single-mode
    ratio |k^beta| / sum_j |k^{alpha_j}| is the objective for every p; the
    common |k|^{|beta|} factors cancel, leaving an integer ratio evaluated
    with exact rational arithmetic.  Shells are scanned outward, candidates
    within a shell in reverse-lexicographic order, keeping the first maximum.
    """
    if kmax < 1:
        raise ValueError("scan range must be >= 1")
    best: Optional[Fraction] = None
    best_k: Optional[tuple] = None
    n = fam.n
    for shell in range(1, kmax + 1):
        cands = [k for k in itertools.product(range(-shell, shell + 1), repeat=n)
                 if max(abs(x) for x in k) == shell]
        for k in sorted(cands, reverse=True):
            num = abs(_int_power(k, fam.beta))
            den = sum(abs(_int_power(k, a)) for a in fam.alphas)
            if den == 0:
                if num > 0:
                    return ScanResult(None, k)
                continue
            r = Fraction(num, den)
            if best is None or r > best:
                best, best_k = r, k
    return ScanResult(best, best_k)


def _int_power(k: tuple, alpha: tuple) -> int:
    out = 1
    for ki, ai in zip(k, alpha):
        if ai:
            out *= ki**ai
    return out


# -- the ascent driver ----------------------------------------------------------

@dataclass
class EstimateReport:
    family: DerivativeFamily
    grid: TorusGrid
    p: float
    k_lower: float
    upper_bound_ref: Optional[float]
    trace: list
    witness: TorusField
    settings: dict
    seed: int

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_dict(),
            "grid": {"n": self.grid.n, "M": self.grid.M, "offset": self.grid.offset},
            "p": self.p,
            "kLower": self.k_lower,
            "upperBoundRef": self.upper_bound_ref,
            "trace": [[int(i), float(v)] for i, v in self.trace],
            "settings": self.settings,
            "seed": self.seed,
        }


def reference_upper_bound(fam: DerivativeFamily) -> Optional[float]:
    """(p* - 1)/2 for the mixed-second-derivative family on R^2."""
    if fam.n == 2 and fam.beta == (1, 1) and set(fam.alphas) == {(2, 0), (0, 2)}:
        return (_pstar(fam.p) - 1.0) / 2.0
    return None


def _ascent(problem: RatioProblem, spec0: np.ndarray, opts: SolverOptions):
    spec = problem.project(spec0.copy())
    nrm = np.linalg.norm(spec)
    if nrm == 0:
        return None
    spec /= nrm
    try:
        val = problem.value(spec)
    except ValueError:
        return None
    trace = [(0, val)]
    phases = [0.0] if problem.p >= 2 else (
        [opts.eps_grad] if opts.eps_grad is not None else [1e-8, 1e-10, 1e-12])
    it = 0
    phase_values = []
    for eps in phases:
        stall = 0
        step = opts.step0
        while it < opts.max_iter:
            it += 1
            _, grad = problem.value_and_grad(spec, eps)
            gn2 = float(np.sum(np.abs(grad) ** 2))
            if gn2 == 0.0:
                break
            accepted = False
            s = step
            for _ in range(opts.max_halvings):
                cand = problem.project(spec + s * grad)
                cn = np.linalg.norm(cand)
                if cn == 0.0:
                    s *= 0.5
                    continue
                cand /= cn
                v = problem.value(cand)
                if v > val + 1e-4 * s * gn2:
                    rel = (v - val) / max(val, 1e-300)
                    spec, val = cand, v
                    step = min(s * 2.0, 1e3)
                    accepted = True
                    break
                s *= 0.5
            trace.append((it, val))
            if not accepted:
                break
            if rel < opts.tol:
                stall += 1
                if stall >= opts.patience:
                    break
            else:
                stall = 0
        phase_values.append(val)
    eps_effect = (max(phase_values) - min(phase_values)) if len(phase_values) > 1 else 0.0
    return val, spec, trace, eps_effect


def maximize_ratio(fam: DerivativeFamily, grid: TorusGrid,
                   opts: Optional[SolverOptions] = None) -> EstimateReport:
    """Multi-start projected gradient ascent on the multiplier ratio.

    Starts: the single-frequency scan winner, the lifted square-wave witness
    along -F when the family admits a parity set, an optional caller-provided
    warm start, and seeded random bandlimited fields.  Deterministic given
    the seed; the reported kLower is re-evaluated from the stored witness.
    """
    opts = opts or SolverOptions()
    if grid.nyquist < 4:
        raise ValueError("grid must resolve at least |k|_inf <= 4")
    problem = RatioProblem(fam, grid, None, opts.oversample)
    starts: List[np.ndarray] = []
    scan = single_frequency_scan(fam, min(opts.scan_range, grid.nyquist))
    if scan.freq is not None and (scan.ratio is None or scan.ratio > 0):
        starts.append(_as_spec_array(mode(grid, scan.freq), grid))
    try:
        fam_f = fam.with_parity_set()
        deg = min(5, grid.nyquist if grid.nyquist % 2 == 1 else grid.nyquist - 1)
        if deg >= 1:
            wave = square_wave_poly(deg)
            starts.append(_as_spec_array(
                lift_to_torus(wave, fam_f.sign_vector(), grid), grid))
    except ValueError:
        pass
    if opts.warm_start is not None:
        starts.append(_as_spec_array(opts.warm_start, grid))
    children = np.random.SeedSequence(opts.seed).spawn(max(opts.starts, 1))
    bl = max(1, grid.M // 4)
    while len(starts) < max(opts.starts, len(starts)):
        rng = np.random.default_rng(children[len(starts) % len(children)])
        starts.append(_as_spec_array(random_bandlimited(grid, bl, rng), grid))
    best = None
    for spec0 in starts:
        out = _ascent(problem, spec0, opts)
        if out is None:
            continue
        if best is None or out[0] > best[0]:
            best = out
    if best is None:
        raise ValueError("every start was degenerate (ratio undefined)")
    val, spec, trace, eps_effect = best
    witness = TorusField(grid, SPECTRAL, spec, grid.nyquist)
    k_lower = problem.value(spec)
    settings = opts.to_dict()
    settings["epsPhaseEffect"] = eps_effect
    return EstimateReport(
        family=fam, grid=grid, p=problem.p, k_lower=k_lower,
        upper_bound_ref=reference_upper_bound(fam),
        trace=trace, witness=witness, settings=settings, seed=opts.seed)
