"""Explicit witness constructions: square-wave trig polynomials, lifted
sign-line fields, eigen-witness pairs, layered tensor stacks on T^{rn},
and the frequency-shift transformation with its commutation-error bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .symbols import DerivativeFamily, HomogeneousSymbol, eigenvalue_on_sign_vector
from .torus import (SPECTRAL, TorusField, TorusGrid, a_norm, apply_multiplier,
                    lp_norm, mode, periodic_sign)


@dataclass(frozen=True)
class TrigPoly1D:
    """A 1D trigonometric polynomial with zero mean, as {frequency: coeff}."""

    coeffs: dict

    def __post_init__(self):
        clean = {int(l): complex(c) for l, c in self.coeffs.items() if c != 0}
        if 0 in clean:
            raise ValueError("zero-mean polynomial cannot carry a constant term")
        object.__setattr__(self, "coeffs", clean)

    @property
    def degree(self) -> int:
        return max((abs(l) for l in self.coeffs), default=0)

    @property
    def is_real(self) -> bool:
        return all(abs(self.coeffs.get(-l, 0) - np.conj(c)) < 1e-14
                   for l, c in self.coeffs.items())

    def evaluate(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        out = np.zeros(th.shape, dtype=complex)
        for l, c in self.coeffs.items():
            out += c * np.exp(2j * np.pi * l * th)
        return out

    def coefficient_a_norm(self) -> float:
        return float(sum(abs(c) for c in self.coeffs.values()))


def square_wave_poly(degree: int) -> TrigPoly1D:
    """Fourier partial sum of the 1-periodic sign function up to ``degree``.

    a(theta) = sum over odd l <= degree of (4/(pi l)) sin(2 pi l theta).
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    coeffs = {}
    for l in range(1, degree + 1, 2):
        coeffs[l] = -2j / (np.pi * l)
        coeffs[-l] = 2j / (np.pi * l)
    return TrigPoly1D(coeffs)


def sign_distance(a: TrigPoly1D, p: float, panels: int = 128, nodes: int = 24) -> float:
    """|| sgn - a ||_{L^p(T)} by Gauss-Legendre panels split at the sign jumps.

    The integrand is piecewise analytic on [-1/2, 0] and [0, 1/2] apart from
    |.|^p kinks where (sgn - a) vanishes; panel subdivision keeps those mild.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    x, w = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for lo, hi, s in ((-0.5, 0.0, -1.0), (0.0, 0.5, 1.0)):
        edges = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        pts = mid[:, None] + half[:, None] * x[None, :]
        vals = np.abs(s - a.evaluate(pts).real) ** p
        total += float(np.sum(vals * (half[:, None] * w[None, :])))
    return total ** (1.0 / p)


def lift_to_torus(a: TrigPoly1D, b: Sequence[int], grid: TorusGrid) -> TorusField:
    """The field a(b . t) on T^n; spectral support lies on the line {l b}."""
    b = tuple(int(x) for x in b)
    if len(b) != grid.n or any(x not in (-1, 1) for x in b):
        raise ValueError(f"b must lie in {{-1,1}}^{grid.n}")
    if a.degree > grid.nyquist:
        raise ValueError(f"degree {a.degree} exceeds grid Nyquist {grid.nyquist}")
    entries = {tuple(l * bi for bi in b): c for l, c in a.coeffs.items()}
    if grid.dense_ok():
        f = TorusField.zero(grid).to_dense()
        arr = f.values.copy()
        half = grid.M // 2
        for k, c in entries.items():
            arr[tuple(ki + half for ki in k)] = c
        return TorusField(grid, SPECTRAL, arr, a.degree)
    return TorusField(grid, SPECTRAL, entries, a.degree)


def eigen_witness_pair(fam: DerivativeFamily, a: TrigPoly1D,
                       grid: TorusGrid) -> Tuple[TorusField, TorusField]:
    """The pair (a+, a-): lifts of a along (1,..,1) and along b_F.

    For a normalized family these are exact eigenfunctions: the beta-symbol
    multiplier returns +/- n^{-|beta|/2} times the field (sign split by the
    parity set) and every alpha-symbol multiplier returns + n^{-|beta|/2}.
    """
    if not fam.is_normalized:
        raise ValueError("family must be normalized (|beta| even, parity sum odd)")
    if grid.n != fam.n:
        raise ValueError("grid dimension does not match the family")
    a_plus = lift_to_torus(a, (1,) * fam.n, grid)
    a_minus = lift_to_torus(a, fam.sign_vector(), grid)
    return a_plus, a_minus


def _relative_l2_residual(field: TorusField, mult: TorusField, eig: float) -> float:
    from .torus import l2_norm_spectral
    diff = mult - field * eig
    return l2_norm_spectral(diff) / l2_norm_spectral(field)


def eigen_relation_residuals(fam: DerivativeFamily, a_plus: TorusField,
                             a_minus: TorusField) -> dict:
    """Measure || T f - lambda f ||_2 / || f ||_2 for every multiplier."""
    out = {}
    scale = float(fam.n) ** (-sum(fam.beta) / 2.0)
    m = fam.symbol()
    out["m_plus"] = _relative_l2_residual(a_plus, apply_multiplier(a_plus, m), scale)
    out["m_minus"] = _relative_l2_residual(a_minus, apply_multiplier(a_minus, m), -scale)
    for j, mj in enumerate(fam.alpha_symbols()):
        out[f"m{j + 1}_plus"] = _relative_l2_residual(a_plus, apply_multiplier(a_plus, mj), scale)
        out[f"m{j + 1}_minus"] = _relative_l2_residual(a_minus, apply_multiplier(a_minus, mj), scale)
    return out


# -- layered stacks on T^{rn} -------------------------------------------------

@dataclass
class StackedField:
    """Sum of layers zeta_l(t_l) Phi_l(t_1..t_{l-1}) assembled on T^{rn}."""

    base_n: int
    layers: list  # list of (zeta: TorusField on T^n, phi: TorusField | complex)
    signs: tuple
    assembled: TorusField

    @property
    def r(self) -> int:
        return len(self.layers)

    def verify_pointwise(self, n_samples: int = 16, seed: int = 7) -> float:
        """Max deviation between the assembled field and the layer sum on
        a sample of grid points (should be <= 1e-10 by construction)."""
        rng = np.random.default_rng(seed)
        grid = self.assembled.grid
        M, n = grid.M, self.base_n
        idx = rng.integers(0, M, size=(n_samples, grid.n))
        pts = (idx + (0.5 if grid.offset else 0.0)) / M - 0.5
        direct = np.zeros(n_samples, dtype=complex)
        for l, ((zeta, phi), s) in enumerate(zip(self.layers, self.signs)):
            z_vals = zeta.evaluate_at(pts[:, l * n:(l + 1) * n])
            if isinstance(phi, TorusField):
                p_vals = phi.evaluate_at(pts[:, :l * n])
            else:
                p_vals = np.full(n_samples, complex(phi))
            direct += s * z_vals * p_vals
        assembled = self.assembled.evaluate_at(pts)
        scale = max(np.max(np.abs(assembled)), 1.0)
        return float(np.max(np.abs(assembled - direct)) / scale)


def tensor_product_field(factors: Sequence[Tuple[int, TorusField]],
                         num_blocks: int, n: int, M: int,
                         offset: bool = True,
                         scalar: complex = 1.0) -> TorusField:
    """Tensor product of per-block fields, as a field on T^{num_blocks * n}.

    ``factors`` lists (block index, field on T^n); blocks not listed carry
    frequency zero.  Returns a sparse spectral field.
    """
    grid = TorusGrid(max(num_blocks * n, 1), M, offset) if num_blocks > 0 else None
    if num_blocks == 0:
        raise ValueError("tensor product needs at least one block")
    entries = {(0,) * (num_blocks * n): complex(scalar)}
    for block, f in factors:
        if not (0 <= block < num_blocks):
            raise ValueError("block index out of range")
        new = {}
        for key, c in entries.items():
            for k, fc in f.spectral_items():
                kk = list(key)
                for i, ki in enumerate(k):
                    kk[block * n + i] += ki
                new_key = tuple(kk)
                new[new_key] = new.get(new_key, 0.0 + 0.0j) + c * fc
        entries = new
    return TorusField(grid, SPECTRAL, entries)


def bourgain_stack(zetas: Sequence[TorusField], phis: Sequence,
                   signs: Optional[Sequence[int]] = None,
                   max_dims: int = 6) -> StackedField:
    """Assemble sum_l sigma_l zeta_l(t_l) Phi_l(t_1..t_{l-1}) on T^{rn}.

    phis[0] may be a plain scalar (the empty torus T^0 is a point); all
    grids must share the points-per-axis count M.
    """
    r = len(zetas)
    if len(phis) != r:
        raise ValueError("need one Phi per layer")
    if r == 0:
        raise ValueError("stack needs at least one layer")
    n = zetas[0].grid.n
    M = zetas[0].grid.M
    offset = zetas[0].grid.offset
    if r * n > max_dims:
        raise ValueError(f"total dimension r*n = {r * n} beyond desk scale {max_dims}")
    if signs is None:
        signs = (1,) * r
    signs = tuple(int(s) for s in signs)
    if len(signs) != r or any(s not in (-1, 1) for s in signs):
        raise ValueError("signs must be a vector in {-1,1}^r")
    layers = []
    entries: Dict[tuple, complex] = {}
    total = r * n
    for l, (zeta, phi) in enumerate(zip(zetas, phis)):
        if zeta.grid.n != n or zeta.grid.M != M:
            raise ValueError(f"layer {l + 1}: zeta grid mismatch")
        if isinstance(phi, TorusField):
            if phi.grid.n != l * n or phi.grid.M != M:
                raise ValueError(f"layer {l + 1}: Phi must live on T^{l * n} with M={M}")
            phi_items = list(phi.spectral_items())
        else:
            if l != 0:
                raise ValueError("scalar Phi is only allowed for the first layer")
            phi_items = [((), complex(phi))]
        layers.append((zeta, phi))
        for kz, cz in zeta.spectral_items():
            for kp, cp in phi_items:
                key = tuple(kp) + tuple(kz) + (0,) * (total - (l + 1) * n)
                val = signs[l] * cz * cp
                entries[key] = entries.get(key, 0.0 + 0.0j) + val
    grid = TorusGrid(total, M, offset)
    assembled = TorusField(grid, SPECTRAL, entries)
    if grid.dense_ok():
        assembled = assembled.to_dense()
    return StackedField(n, layers, signs, assembled)


def theorem_lower_bound(fam: DerivativeFamily, stack_plus: StackedField,
                        stack_signed: StackedField, oversample: int = 4) -> float:
    """(1/N) * ||signed stack||_p / ||plain stack||_p.

    With the layers built from the family's eigen-witnesses this ratio is a
    certified lower bound for the best constant K of the derivative
    inequality: the signed stack equals n^{|beta|/2} times the layerwise
    beta-multiplier image of the plain stack, and each of the N alpha
    multipliers reproduces the plain stack up to the same scale.
    """
    if stack_plus.r != stack_signed.r or stack_plus.base_n != stack_signed.base_n:
        raise ValueError("stacks are not compatible")
    if any(s != 1 for s in stack_plus.signs):
        raise ValueError("reference stack must carry all +1 signs")
    for (za, pa), (zb, pb) in zip(stack_plus.layers, stack_signed.layers):
        if za is not zb or pa is not pb:
            raise ValueError("signed stack must reuse the reference stack's layers")
    p = fam.p
    den = lp_norm(stack_plus.assembled, p, oversample)
    if den == 0:
        raise ValueError("reference stack has zero norm")
    num = lp_norm(stack_signed.assembled, p, oversample)
    return num / (fam.N * den)


def _single_layer_field(stack: StackedField, l: int) -> TorusField:
    """The term zeta_l Phi_l as a spectral field on the full T^{rn} grid."""
    zeta, phi = stack.layers[l]
    n, total = stack.base_n, stack.r * stack.base_n
    if isinstance(phi, TorusField):
        phi_items = list(phi.spectral_items())
    else:
        phi_items = [((), complex(phi))]
    entries: Dict[tuple, complex] = {}
    for kz, cz in zeta.spectral_items():
        for kp, cp in phi_items:
            key = tuple(kp) + tuple(kz) + (0,) * (total - (l + 1) * n)
            entries[key] = entries.get(key, 0.0 + 0.0j) + cz * cp
    return TorusField(stack.assembled.grid, SPECTRAL, entries)


def multiplier_identity_residuals(fam: DerivativeFamily, stack_plus: StackedField,
                                  stack_signed: StackedField) -> dict:
    """Residuals of the layerwise multiplier identities behind the lower bound.

    Checks that sum_l (T_m)_l zeta_l Phi_l equals n^{-|beta|/2} times the
    signed stack, and that each alpha multiplier reproduces n^{-|beta|/2}
    times the plain stack; both in relative L2 on the assembled grid.
    """
    from .torus import l2_norm_spectral
    n, r = stack_plus.base_n, stack_plus.r
    scale = float(fam.n) ** (-sum(fam.beta) / 2.0)
    terms = [_single_layer_field(stack_plus, l) for l in range(r)]
    ref_plus = stack_plus.assembled
    ref_signed = stack_signed.assembled
    norm = l2_norm_spectral(ref_plus)
    out = {}
    for name, symbol, target in (
            [("m", fam.symbol(), ref_signed)]
            + [(f"m{j + 1}", mj, ref_plus) for j, mj in enumerate(fam.alpha_symbols())]):
        acc = None
        for l, term in enumerate(terms):
            axes = tuple(range(l * n, (l + 1) * n))
            img = apply_multiplier(term, symbol, axes=axes)
            acc = img if acc is None else acc + img
        out[name] = l2_norm_spectral(acc - target * scale) / norm
    return out


def walsh_witness_stacks(fam: DerivativeFamily, a: TrigPoly1D, grid: TorusGrid,
                         signs: Sequence[int],
                         tables: Sequence[np.ndarray]) -> Tuple[StackedField, StackedField]:
    """Build the plain and signed proof stacks from a Walsh martingale witness.

    Layer l uses zeta_l = lift of ``a`` along (1,..,1) when sigma_l = +1 and
    along b_F when sigma_l = -1, so the layer is an exact eigenfunction with
    eigenvalue sigma_l n^{-|beta|/2}; Phi_l substitutes a(b_i . t_i) for the
    i-th sign in the Walsh expansion of the l-th difference table.
    """
    from .martingale import walsh_coefficients
    if not fam.is_normalized:
        raise ValueError("family must be normalized")
    signs = tuple(int(s) for s in signs)
    r = len(signs)
    if len(tables) != r:
        raise ValueError("need one difference table per layer")
    n, M, offset = fam.n, grid.M, grid.offset
    b_plus = (1,) * n
    b_minus = fam.sign_vector()
    lifts = [lift_to_torus(a, b_plus if s == 1 else b_minus, grid) for s in signs]
    phis: list = []
    for l in range(r):
        wc = walsh_coefficients(np.asarray(tables[l], dtype=float), l)
        if l == 0:
            phis.append(complex(wc.get(frozenset(), 0.0)))
            continue
        total = None
        for Sset, c in sorted(wc.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
            factors = [(i, lifts[i]) for i in sorted(Sset)]
            term = tensor_product_field(factors, l, n, M, offset, scalar=c)
            total = term if total is None else total + term
        if total is None:
            total = TorusField(TorusGrid(l * n, M, offset), SPECTRAL, {})
        phis.append(total)
    plus = bourgain_stack(lifts, phis, None)
    signed = bourgain_stack(lifts, phis, signs)
    signed.layers = plus.layers  # matched pair shares layer objects
    return plus, signed


# -- frequency-shift transformation ------------------------------------------

def default_shift_moduli(B: int, r: int) -> tuple:
    """A 'sufficiently rapidly increasing' modulus schedule.

    M_1 = 4B + 1 and M_l = M_{l-1} (4 B r + 1) keeps base-M digits from
    carrying, which forces frequency injectivity; the shift still verifies
    injectivity at runtime.
    """
    if B < 1 or r < 1:
        raise ValueError("need B >= 1 and r >= 1")
    out = [4 * B + 1]
    for _ in range(r - 1):
        out.append(out[-1] * (4 * B * r + 1))
    return tuple(out)


def bourgain_shift(f: TorusField, moduli: Sequence[int], tbar: Sequence[float],
                   out_M: Optional[int] = None) -> TorusField:
    """Collapse a field on T^{l n} to T^n along t -> tbar + (M_1 t, .., M_l t).

    The coefficient at (s, k) moves to frequency M_1 s_1 + .. + M_{l-1} s_{l-1}
    + M_l k with the unimodular scale e^{2 pi i (s,k).tbar}; a frequency
    collision (moduli not increasing fast enough) raises.
    """
    moduli = tuple(int(m) for m in moduli)
    L = len(moduli)
    if any(m2 <= m1 for m1, m2 in zip(moduli, moduli[1:])) or moduli[0] < 1:
        raise ValueError("moduli must be strictly increasing positive integers")
    if f.grid.n % L != 0:
        raise ValueError(f"field dimension {f.grid.n} is not a multiple of {L} layers")
    n = f.grid.n // L
    tb = np.asarray(tbar, dtype=float)
    if tb.shape != (f.grid.n,):
        raise ValueError(f"tbar must have length {f.grid.n}")
    entries: Dict[tuple, complex] = {}
    sources: Dict[tuple, tuple] = {}
    max_out = 0
    for key, c in f.spectral_items():
        karr = np.asarray(key, dtype=np.int64).reshape(L, n)
        out_k = tuple(int(x) for x in (np.array(moduli)[:, None] * karr).sum(axis=0))
        if out_k in entries:
            raise ValueError(
                f"frequency collision at {out_k}: sources {sources[out_k]} and {key}; "
                "moduli are not increasing rapidly enough")
        phase = np.exp(2j * np.pi * float(np.dot(np.asarray(key, dtype=float), tb)))
        entries[out_k] = c * phase
        sources[out_k] = key
        max_out = max(max_out, max((abs(x) for x in out_k), default=0))
    if out_M is None:
        out_M = 2 * (max_out + 1)
    grid = TorusGrid(n, out_M, f.grid.offset)
    return TorusField(grid, SPECTRAL, entries)


def sup_gradient_bound(symbol: HomogeneousSymbol, n_samples: int = 10_000,
                       safety: float = 1.1, seed: int = 0) -> float:
    """Sampled bound for sup |grad m| over the shell 1/2 <= |z| <= 4."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_samples, symbol.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.uniform(0.5, 4.0, size=n_samples)
    pts = dirs * radii[:, None]
    grads = symbol.grad_at(pts)
    return safety * float(np.max(np.linalg.norm(grads, axis=-1)))


@dataclass(frozen=True)
class ShiftCommutation:
    error: float          # || T_m f~ - (T_m f)~ ||_A, measured
    bound: float          # deflection * sampled sup|grad m| * ||f||_A
    deflection: float     # max |(M_1 s_1 + ..)/M_l| over the support
    grad_bound: float


def shift_commutation(f: TorusField, moduli: Sequence[int], tbar: Sequence[float],
                      symbol: HomogeneousSymbol) -> ShiftCommutation:
    """Compare multiplier-then-shift against shift-then-multiplier in A-norm.

    The mean value theorem gives |m(k + u) - m(k)| <= |u| sup |grad m| with
    u the frequency deflection (M_1 s_1 + ..)/M_l, provided the segment stays
    in |z| >= 1/2; the deflection is computed exactly from the support.
    """
    moduli = tuple(int(m) for m in moduli)
    L = len(moduli)
    n = f.grid.n // L
    if symbol.n != n:
        raise ValueError("symbol dimension must equal the base block dimension")
    last_axes = tuple(range(f.grid.n - n, f.grid.n))
    mult_first = bourgain_shift(apply_multiplier(f, symbol, axes=last_axes), moduli, tbar)
    shifted = bourgain_shift(f, moduli, tbar)
    shift_first = apply_multiplier(shifted, symbol)
    if mult_first.grid.M != shift_first.grid.M:
        shift_first = TorusField(mult_first.grid, SPECTRAL,
                                 dict(shift_first.spectral_items()))
    err = a_norm(mult_first - shift_first)
    defl = 0.0
    for key, _ in f.spectral_items():
        karr = np.asarray(key, dtype=float).reshape(L, n)
        u = (np.array(moduli[:-1], dtype=float)[:, None] * karr[:-1]).sum(axis=0) / moduli[-1]
        defl = max(defl, float(np.linalg.norm(u)))
    if defl >= 0.5:
        raise ValueError("deflection reaches 1/2; the mean-value bound does not apply")
    G = sup_gradient_bound(symbol)
    return ShiftCommutation(error=err, bound=defl * G * a_norm(f),
                            deflection=defl, grad_bound=G)
