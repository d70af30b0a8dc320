"""Uniform-grid fields on the n-torus [-1/2, 1/2)^n with spectral operations.

Grid points along each axis are t_j = (j + offset/2)/M - 1/2 for j = 0..M-1,
and representable frequencies are the integers -M/2 .. M/2-1.  The forward
transform is normalized as an average over grid points, so the coefficient
of e_k(t) = exp(2*pi*i*k.t) in a trig polynomial is recovered exactly; the
inverse transform is the plain sum over frequencies.

Spectral data is stored either as a dense complex array in signed frequency
order (axis index i corresponds to k = i - M/2) or, for high-dimensional
fields with few nonzero coefficients, as a mapping {frequency tuple: coeff}.
All operations are pure; fields are treated as immutable values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

PHYSICAL = "physical"
SPECTRAL = "spectral"

# Largest dense array we are willing to materialize (entries, not bytes).
DENSE_LIMIT = 2**24


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the torus [-1/2, 1/2)^n.

    Attributes:
        n: dimension (>= 1)
        M: points per axis (positive even integer)
        offset: half-cell shift flag; when True no 1D grid point sits at a
            jump of the periodic sign function.
    """

    n: int
    M: int
    offset: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.M < 2 or self.M % 2 != 0:
            raise ValueError(f"points per axis must be a positive even integer, got {self.M}")
        if self.M ** self.n > 2**62:
            raise ValueError("grid point count overflows the addressable size")

    @property
    def size(self) -> int:
        return self.M ** self.n

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.n

    @property
    def nyquist(self) -> int:
        """Largest |k|_inf representable with a matching negative partner."""
        return self.M // 2 - 1

    def axis_points(self) -> np.ndarray:
        """1D coordinates t_j = (j + offset/2)/M - 1/2."""
        delta = 0.5 if self.offset else 0.0
        return (np.arange(self.M) + delta) / self.M - 0.5

    def axis_freqs(self) -> np.ndarray:
        """Signed frequencies -M/2 .. M/2-1 in storage order."""
        return np.arange(self.M) - self.M // 2

    def meshgrid(self):
        pts = self.axis_points()
        return np.meshgrid(*([pts] * self.n), indexing="ij")

    def dense_ok(self) -> bool:
        return self.size <= DENSE_LIMIT


def periodic_sign(x) -> np.ndarray:
    """The 1-periodic sign: +1 on [0, 1/2), -1 on [-1/2, 0), after reduction.

    The half-open convention leaves no zero values, which is what makes
    sign sampling on grids unambiguous.
    """
    y = np.mod(np.asarray(x, dtype=float) + 0.5, 1.0) - 0.5
    return np.where(y >= 0, 1.0, -1.0)


def _axis_phase(grid: TorusGrid) -> np.ndarray:
    """Per-axis factor mapping raw FFT output to coefficients on the offset grid.

    With t_j = (j + delta)/M - 1/2 one has
    exp(-2*pi*i*k*t_j) = exp(-2*pi*i*k*j/M) * exp(-2*pi*i*k*delta/M) * (-1)^k.
    """
    k = grid.axis_freqs()
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    if grid.offset:
        return sign * np.exp(-1j * np.pi * k / grid.M)
    return sign.astype(complex)


def _apply_axis_factors(values: np.ndarray, factor: np.ndarray) -> np.ndarray:
    out = values
    n = values.ndim
    for ax in range(n):
        shape = [1] * n
        shape[ax] = -1
        out = out * factor.reshape(shape)
    return out


class TorusField:
    """A complex function on a torus grid, in physical or spectral form."""

    def __init__(self, grid: TorusGrid, representation: str,
                 values: Union[np.ndarray, Mapping[tuple, complex]],
                 bandlimit: Optional[int] = None):
        if representation not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {representation!r}")
        self.grid = grid
        self.representation = representation
        if isinstance(values, Mapping):
            if representation != SPECTRAL:
                raise ValueError("sparse storage is only supported for spectral fields")
            half = grid.M // 2
            for key in values:
                if len(key) != grid.n:
                    raise ValueError(f"frequency {key} has wrong length for n={grid.n}")
                if any(ki < -half or ki >= half for ki in key):
                    raise ValueError(f"frequency {key} outside [-M/2, M/2) for M={grid.M}")
            self.values = {tuple(int(x) for x in k): complex(v) for k, v in values.items()
                           if v != 0}
        else:
            arr = np.asarray(values, dtype=complex)
            if arr.shape != grid.shape:
                raise ValueError(f"values shape {arr.shape} does not match grid {grid.shape}")
            self.values = arr
        self.bandlimit = bandlimit

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_physical(cls, grid: TorusGrid, values) -> "TorusField":
        return cls(grid, PHYSICAL, np.asarray(values, dtype=complex))

    @classmethod
    def from_spectral(cls, grid: TorusGrid, values,
                      bandlimit: Optional[int] = None) -> "TorusField":
        f = cls(grid, SPECTRAL, values, bandlimit=None)
        if bandlimit is not None:
            f = f.with_bandlimit(bandlimit)
        return f

    @classmethod
    def zero(cls, grid: TorusGrid) -> "TorusField":
        if grid.dense_ok():
            return cls(grid, SPECTRAL, np.zeros(grid.shape, dtype=complex), bandlimit=0)
        return cls(grid, SPECTRAL, {}, bandlimit=0)

    # -- storage helpers ---------------------------------------------------

    @property
    def is_sparse(self) -> bool:
        return isinstance(self.values, dict)

    def copy(self) -> "TorusField":
        vals = dict(self.values) if self.is_sparse else self.values.copy()
        return TorusField(self.grid, self.representation, vals, self.bandlimit)

    def spectral_items(self):
        """Iterate (frequency tuple, coefficient) over nonzero coefficients."""
        if self.representation != SPECTRAL:
            raise ValueError("spectral_items requires a spectral field")
        if self.is_sparse:
            yield from self.values.items()
        else:
            half = self.grid.M // 2
            for idx in zip(*np.nonzero(self.values)):
                k = tuple(int(i) - half for i in idx)
                yield k, complex(self.values[idx])

    def coefficient(self, k: Sequence[int]) -> complex:
        if self.representation != SPECTRAL:
            raise ValueError("coefficient requires a spectral field")
        k = tuple(int(x) for x in k)
        if self.is_sparse:
            return self.values.get(k, 0.0 + 0.0j)
        half = self.grid.M // 2
        idx = tuple(ki + half for ki in k)
        return complex(self.values[idx])

    def to_dense(self) -> "TorusField":
        if not self.is_sparse:
            return self
        if not self.grid.dense_ok():
            raise ValueError(
                f"grid with {self.grid.size} points is too large to materialize densely")
        arr = np.zeros(self.grid.shape, dtype=complex)
        half = self.grid.M // 2
        for k, c in self.values.items():
            arr[tuple(ki + half for ki in k)] = c
        return TorusField(self.grid, SPECTRAL, arr, self.bandlimit)

    def with_bandlimit(self, bandlimit: Optional[int] = None,
                       force: bool = False) -> "TorusField":
        """Return a copy that declares a bandlimit.

        The unmatched -M/2 planes are forced to zero.  Without ``force`` the
        out-of-band content must already be negligible (relative 1e-12).
        """
        if self.representation != SPECTRAL:
            raise ValueError("bandlimit applies to spectral fields")
        if self.is_sparse:
            support = 0
            for k in self.values:
                support = max(support, max(abs(ki) for ki in k) if k else 0)
            b = support if bandlimit is None else int(bandlimit)
            if support > b:
                raise ValueError(f"support |k|_inf={support} exceeds bandlimit {b}")
            return TorusField(self.grid, SPECTRAL, dict(self.values), b)
        arr = self.values.copy()
        half = self.grid.M // 2
        scale = np.max(np.abs(arr)) if arr.size else 0.0
        b = self.grid.nyquist if bandlimit is None else int(bandlimit)
        if b > self.grid.nyquist:
            raise ValueError(f"bandlimit {b} exceeds grid Nyquist {self.grid.nyquist}")
        k = self.grid.axis_freqs()
        outside = np.abs(k) > b
        for ax in range(self.grid.n):
            idx = [slice(None)] * self.grid.n
            idx[ax] = outside
            block = arr[tuple(idx)]
            if not force and scale > 0 and np.max(np.abs(block), initial=0.0) > 1e-12 * scale:
                raise ValueError(
                    f"content beyond |k|_inf={b} is not negligible; pass force=True to truncate")
            arr[tuple(idx)] = 0.0
        if bandlimit is None:
            nz = np.nonzero(arr)
            b = int(max((np.max(np.abs(i - half)) for i in nz), default=0))
        return TorusField(self.grid, SPECTRAL, arr, b)

    # -- algebra -----------------------------------------------------------

    def _binary(self, other: "TorusField", op) -> "TorusField":
        if not isinstance(other, TorusField):
            return NotImplemented
        if self.grid != other.grid or self.representation != other.representation:
            raise ValueError("fields must share grid and representation")
        bl = None
        if self.bandlimit is not None and other.bandlimit is not None:
            bl = max(self.bandlimit, other.bandlimit)
        if self.is_sparse and other.is_sparse:
            out = dict(self.values)
            for k, c in other.values.items():
                out[k] = op(out.get(k, 0.0 + 0.0j), c)
            out = {k: v for k, v in out.items() if v != 0}
            return TorusField(self.grid, self.representation, out, bl)
        a = self.to_dense().values if self.is_sparse else self.values
        b = other.to_dense().values if other.is_sparse else other.values
        return TorusField(self.grid, self.representation, op(a, b), bl)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, scalar):
        if isinstance(scalar, TorusField):
            return NotImplemented
        c = complex(scalar)
        if self.is_sparse:
            vals = {k: c * v for k, v in self.values.items()}
        else:
            vals = c * self.values
        return TorusField(self.grid, self.representation, vals, self.bandlimit)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    # -- evaluation --------------------------------------------------------

    def evaluate_at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the trig polynomial at arbitrary torus points (P, n)."""
        f = self if self.representation == SPECTRAL else forward_transform(self)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        items = list(f.spectral_items())
        if not items:
            return np.zeros(pts.shape[0], dtype=complex)
        ks = np.array([k for k, _ in items], dtype=float)
        cs = np.array([c for _, c in items], dtype=complex)
        phases = np.exp(2j * np.pi * (pts @ ks.T))
        return phases @ cs


# -- transforms -------------------------------------------------------------

def forward_transform(f: TorusField) -> TorusField:
    """Physical samples -> spectral coefficients (average normalization)."""
    if f.representation != PHYSICAL:
        raise ValueError("forward_transform expects a physical field")
    raw = np.fft.fftshift(np.fft.fftn(f.values)) / f.grid.size
    coeffs = _apply_axis_factors(raw, _axis_phase(f.grid))
    return TorusField(f.grid, SPECTRAL, coeffs, f.bandlimit)


def inverse_transform(f: TorusField) -> TorusField:
    """Spectral coefficients -> physical samples (plain sum over modes)."""
    if f.representation != SPECTRAL:
        raise ValueError("inverse_transform expects a spectral field")
    g = f.to_dense() if f.is_sparse else f
    raw = _apply_axis_factors(g.values, _axis_phase(f.grid).conj())
    phys = np.fft.ifftn(np.fft.ifftshift(raw)) * f.grid.size
    return TorusField(f.grid, PHYSICAL, phys, f.bandlimit)


def _as_spectral(f: TorusField) -> TorusField:
    return f if f.representation == SPECTRAL else forward_transform(f)


# -- operators --------------------------------------------------------------

def apply_multiplier(f: TorusField, symbol, axes: Optional[Sequence[int]] = None) -> TorusField:
    """Multiply spectral coefficients pointwise by symbol(k).

    ``symbol`` must provide ``at(k_array)`` with k_array of shape (..., d);
    homogeneous symbols evaluate to 0 at k = 0, so mean-zero is preserved.
    ``axes`` selects the coordinate block forming the symbol's argument
    (default: all axes), which realizes tensor extensions of the operator.
    """
    g = _as_spectral(f)
    if axes is None:
        axes = tuple(range(g.grid.n))
    axes = tuple(int(a) for a in axes)
    if g.is_sparse:
        if not g.values:
            return g.copy()
        ks = np.array(list(g.values.keys()), dtype=int)
        vals = symbol.at(ks[:, axes])
        out = {}
        for key, c, m in zip(g.values.keys(), g.values.values(), vals):
            if m != 0:
                out[key] = c * m
        return TorusField(g.grid, SPECTRAL, out, g.bandlimit)
    if list(axes) != sorted(set(axes)):
        raise ValueError("axes must be strictly increasing")
    k1 = g.grid.axis_freqs()
    mesh = np.meshgrid(*([k1] * len(axes)), indexing="ij")
    m = symbol.at(np.stack(mesh, axis=-1))
    expanded = m.reshape([g.grid.M if a in axes else 1 for a in range(g.grid.n)])
    return TorusField(g.grid, SPECTRAL, g.values * expanded, g.bandlimit)


def spectral_derivative(f: TorusField, gamma: Sequence[int]) -> TorusField:
    """Multiply the coefficient at k by prod_i (2*pi*i*k_i)^gamma_i."""
    g = _as_spectral(f)
    gamma = tuple(int(x) for x in gamma)
    if len(gamma) != g.grid.n:
        raise ValueError(f"derivative index length {len(gamma)} != dimension {g.grid.n}")
    if any(x < 0 for x in gamma):
        raise ValueError("derivative orders must be nonnegative")
    if g.bandlimit is None:
        g = g.with_bandlimit()
    if g.bandlimit > g.grid.nyquist:
        raise ValueError("field is not bandlimited below Nyquist")
    if g.is_sparse:
        out = {}
        for k, c in g.values.items():
            factor = complex(1.0)
            for ki, gi in zip(k, gamma):
                if gi:
                    factor *= (2j * np.pi * ki) ** gi
            if factor != 0:
                out[k] = c * factor
        return TorusField(g.grid, SPECTRAL, out, g.bandlimit)
    k1 = g.grid.axis_freqs().astype(float)
    vals = g.values
    for ax, gi in enumerate(gamma):
        if gi == 0:
            continue
        shape = [1] * g.grid.n
        shape[ax] = -1
        vals = vals * ((2j * np.pi * k1) ** gi).reshape(shape)
    return TorusField(g.grid, SPECTRAL, vals, g.bandlimit)


def project_mean_zero(f: TorusField) -> TorusField:
    """Set the coefficient at k = 0 to exactly zero."""
    g = _as_spectral(f)
    if g.is_sparse:
        vals = dict(g.values)
        vals.pop((0,) * g.grid.n, None)
        return TorusField(g.grid, SPECTRAL, vals, g.bandlimit)
    vals = g.values.copy()
    vals[(g.grid.M // 2,) * g.grid.n] = 0.0
    return TorusField(g.grid, SPECTRAL, vals, g.bandlimit)


def a_norm(f: TorusField) -> float:
    """Sum of the moduli of the Fourier coefficients."""
    g = _as_spectral(f)
    if g.is_sparse:
        return float(sum(abs(c) for c in g.values.values()))
    return float(np.sum(np.abs(g.values)))


def l2_norm_spectral(f: TorusField) -> float:
    g = _as_spectral(f)
    if g.is_sparse:
        return float(np.sqrt(sum(abs(c) ** 2 for c in g.values.values())))
    return float(np.linalg.norm(g.values.ravel()))


def _sparse_self_convolve(items: dict, n: int) -> dict:
    """Coefficients of f*f (pointwise square in physical space)."""
    keys = np.array(list(items.keys()), dtype=np.int64)
    vals = np.array(list(items.values()), dtype=complex)
    out = {}
    for i in range(len(keys)):
        sums = keys + keys[i]
        prods = vals * vals[i]
        for k, c in zip(map(tuple, sums.tolist()), prods):
            out[k] = out.get(k, 0.0 + 0.0j) + c
    return out


def lp_norm(f: TorusField, p: float, oversample: int = 4) -> float:
    """L^p norm by grid quadrature after zero-pad oversampling.

    Returns (mean over the oversampled grid of |f(t)|^p)^(1/p).  For even
    integer p and bandlimited f the uniform-grid average is exact once the
    fine grid resolves p times the bandlimit.
    """
    if p <= 1:
        raise ValueError(f"lp_norm requires p > 1, got {p}")
    oversample = int(oversample)
    if oversample < 1:
        raise ValueError("oversample must be a positive integer")
    g = _as_spectral(f)
    if g.is_sparse:
        if p == 2:
            return l2_norm_spectral(g)
        if p == 4 and len(g.values) ** 2 <= 4_000_000:
            sq = _sparse_self_convolve(g.values, g.grid.n)
            return float(np.sqrt(np.sqrt(sum(abs(c) ** 2 for c in sq.values()))))
        if g.grid.dense_ok():
            g = g.to_dense()
        else:
            raise ValueError(
                "general-p norm of a sparse field on a large grid is not supported; "
                "use p = 2 (Parseval) or p = 4 (coefficient convolution)")
    if g.bandlimit is None:
        g = g.with_bandlimit()
    M, n = g.grid.M, g.grid.n
    Mf = oversample * M
    if Mf ** n > DENSE_LIMIT:
        if p == 2:
            return l2_norm_spectral(g)
        raise ValueError("oversampled grid exceeds the dense materialization cap; "
                         "use p = 2 or a coarser grid")
    if oversample == 1:
        fine_spec = g
    else:
        pad = np.zeros((Mf,) * n, dtype=complex)
        off = (Mf - M) // 2
        pad[tuple(slice(off, off + M) for _ in range(n))] = g.values
        fine_spec = TorusField(TorusGrid(n, Mf, g.grid.offset), SPECTRAL, pad, g.bandlimit)
    u = inverse_transform(fine_spec).values
    return float(np.mean(np.abs(u) ** p) ** (1.0 / p))


# -- convenience constructors ------------------------------------------------

def mode(grid: TorusGrid, k: Sequence[int], amplitude: complex = 1.0) -> TorusField:
    """The single-frequency field amplitude * e_k."""
    k = tuple(int(x) for x in k)
    if len(k) != grid.n:
        raise ValueError("frequency length does not match dimension")
    if any(abs(ki) > grid.nyquist for ki in k):
        raise ValueError(f"frequency {k} beyond grid Nyquist {grid.nyquist}")
    b = max((abs(ki) for ki in k), default=0)
    if grid.dense_ok():
        arr = np.zeros(grid.shape, dtype=complex)
        arr[tuple(ki + grid.M // 2 for ki in k)] = amplitude
        return TorusField(grid, SPECTRAL, arr, b)
    return TorusField(grid, SPECTRAL, {k: amplitude}, b)


def random_bandlimited(grid: TorusGrid, bandlimit: int, rng: np.random.Generator,
                       mean_zero: bool = True) -> TorusField:
    """Random complex-Gaussian coefficients supported on |k|_inf <= bandlimit."""
    if bandlimit > grid.nyquist:
        raise ValueError("bandlimit beyond grid Nyquist")
    arr = np.zeros(grid.shape, dtype=complex)
    w = 2 * bandlimit + 1
    block = rng.standard_normal((w,) * grid.n) + 1j * rng.standard_normal((w,) * grid.n)
    half = grid.M // 2
    sl = tuple(slice(half - bandlimit, half + bandlimit + 1) for _ in range(grid.n))
    arr[sl] = block
    f = TorusField(grid, SPECTRAL, arr, bandlimit)
    return project_mean_zero(f) if mean_zero else f


# -- serialization -----------------------------------------------------------

def save_field(f: TorusField, path) -> None:
    """Write a field as a JSON header line followed by CSV coefficient rows.

    Spectral rows are (k_1, .., k_n, re, im) over nonzero coefficients;
    physical rows are (j_1, .., j_n, re, im) over all grid points.
    """
    header = {
        "n": f.grid.n,
        "M": f.grid.M,
        "offset": f.grid.offset,
        "representation": f.representation,
        "bandlimit": f.bandlimit,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        if f.representation == SPECTRAL:
            for k, c in sorted(f.spectral_items()):
                cells = [str(x) for x in k] + [repr(c.real), repr(c.imag)]
                fh.write(",".join(cells) + "\n")
        else:
            for idx in np.ndindex(*f.grid.shape):
                c = f.values[idx]
                cells = [str(x) for x in idx] + [repr(float(c.real)), repr(float(c.imag))]
                fh.write(",".join(cells) + "\n")


def load_field(path) -> TorusField:
    with open(path) as fh:
        header = json.loads(fh.readline())
        grid = TorusGrid(header["n"], header["M"], header["offset"])
        n = grid.n
        entries = {}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            key = tuple(int(x) for x in cells[:n])
            entries[key] = float(cells[n]) + 1j * float(cells[n + 1])
    if header["representation"] == SPECTRAL:
        if grid.size <= 2**20:
            arr = np.zeros(grid.shape, dtype=complex)
            half = grid.M // 2
            for k, c in entries.items():
                arr[tuple(ki + half for ki in k)] = c
            return TorusField(grid, SPECTRAL, arr, header["bandlimit"])
        return TorusField(grid, SPECTRAL, entries, header["bandlimit"])
    arr = np.zeros(grid.shape, dtype=complex)
    for idx, c in entries.items():
        arr[idx] = c
    return TorusField(grid, PHYSICAL, arr, header["bandlimit"])
