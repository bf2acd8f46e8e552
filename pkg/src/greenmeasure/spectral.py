"""Uniform centered lattices and continuum-scaled discrete Fourier transforms.

Conventions
-----------
A :class:`GridSpec` with ``n`` points per axis and half-width ``L`` has spacing
``h = 2L/n`` and coordinates ``x_j = (j - n/2) h``, ``j = 0..n-1``, so the
origin is the lattice point ``j = n/2`` on every axis. Real fields are stored
in that centered order (C / row-major over axes ``x1..xd``).

The dual lattice has spacing ``pi/L``. Spectral fields are stored in the
native FFT order (``numpy.fft.fftfreq``), with :meth:`GridSpec.wavenumbers`
giving the matching frequencies. The transforms approximate the continuum
pair::

    F(k) = int exp(-i k.x) f(x) dx      ~  h^d sum_x exp(-i k.x) f(x)
    f(x) = (2 pi)^-d int exp(i k.x) F(k) dk

so that Fourier-side formulas can be used verbatim on grid data. All
convolutions are periodic on the box ``[-L, L)^d``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import SpecError, WrapAroundRisk

__all__ = [
    "GridSpec",
    "RealField",
    "SpectralField",
    "sample_on_grid",
    "dft_forward",
    "dft_inverse",
    "convolve",
    "spectral_power",
    "spectral_eval",
    "boundary_ratio",
    "write_field_csv",
    "read_field_csv",
    "save_field",
    "load_field",
]

WRAP_EPS = 1e-8
FIELD_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    d: int
    n: int = 128
    L: float = 10.0

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise SpecError(f"grid dimension must be a positive integer, got {self.d!r}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n & (self.n - 1):
            raise SpecError(f"points per axis must be a power of two >= 8, got {self.n!r}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise SpecError(f"box half-width must be positive, got {self.L!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def dual_spacing(self) -> float:
        return math.pi / self.L

    @property
    def dual_cell_volume(self) -> float:
        return self.dual_spacing**self.d

    def axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.h

    def axis_frequencies(self) -> np.ndarray:
        """Dual coordinates along one axis, FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    def coordinates(self) -> list:
        """Sparse (broadcastable) coordinate arrays, one per axis."""
        return np.meshgrid(*([self.axis()] * self.d), indexing="ij", sparse=True)

    def points(self) -> np.ndarray:
        """Dense array of lattice points, shape ``(n,)*d + (d,)``."""
        return np.stack(np.meshgrid(*([self.axis()] * self.d), indexing="ij"), axis=-1)

    def radius(self) -> np.ndarray:
        r2 = sum(c * c for c in self.coordinates())
        return np.sqrt(np.broadcast_to(r2, self.shape))

    def wavenumbers(self) -> list:
        """Sparse dual coordinate arrays in FFT order."""
        return np.meshgrid(*([self.axis_frequencies()] * self.d), indexing="ij", sparse=True)

    def wavenumber_radius(self) -> np.ndarray:
        k2 = sum(c * c for c in self.wavenumbers())
        return np.sqrt(np.broadcast_to(k2, self.shape))

    def index_of(self, x, atol: float = 1e-9) -> tuple:
        """Lattice index of a point that lies on the grid."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.d:
            raise ValueError(f"point has {x.size} coordinates, grid has {self.d}")
        j = x / self.h + self.n // 2
        idx = np.rint(j).astype(int)
        if np.any(np.abs(j - idx) > atol / self.h) or np.any(idx < 0) or np.any(idx >= self.n):
            raise ValueError(f"point {x.tolist()} is not a lattice point of {self}")
        return tuple(int(i) for i in idx)

    def point(self, index) -> np.ndarray:
        return (np.asarray(index, dtype=float) - self.n // 2) * self.h

    def to_dict(self) -> dict:
        return {"d": int(self.d), "n": int(self.n), "L": float(self.L)}


@dataclass(frozen=True)
class RealField:
    grid: GridSpec
    values: np.ndarray
    unit: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        if v is self.values:
            v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def at(self, x) -> float:
        return float(self.values[self.grid.index_of(x)])


@dataclass(frozen=True)
class SpectralField:
    grid: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"spectrum shape {v.shape} does not match grid shape {self.grid.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def zero_mode(self) -> complex:
        return complex(self.values[(0,) * self.grid.d])

    def hermitian_defect(self) -> float:
        """max |F(k) - conj F(-k)| relative to max |F|."""
        v = self.values
        flipped = v
        for ax in range(v.ndim):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        scale = np.abs(v).max()
        return float(np.abs(v - np.conj(flipped)).max() / scale) if scale else 0.0


def sample_on_grid(f, grid: GridSpec, unit: str = "") -> RealField:
    """Evaluate ``f`` (vectorized over an array of points, last axis d) on the lattice."""
    values = np.broadcast_to(np.asarray(f(grid.points()), dtype=float), grid.shape)
    return RealField(grid, values, unit)


def dft_forward(fld: RealField) -> SpectralField:
    g = fld.grid
    return SpectralField(g, sfft.fftn(sfft.ifftshift(fld.values)) * g.cell_volume)


def dft_inverse(spec: SpectralField, unit: str = "") -> RealField:
    g = spec.grid
    values = sfft.fftshift(sfft.ifftn(spec.values)).real / g.cell_volume
    return RealField(g, values, unit)


def spectral_eval(spec: SpectralField, x) -> float:
    """Trigonometric interpolant ``(1/V) sum_k F(k) exp(i k.x)`` at an arbitrary point.

    Agrees with :func:`dft_inverse` on lattice points; the real part is returned.
    """
    g = spec.grid
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != g.d:
        raise ValueError(f"point has {x.size} coordinates, grid has {g.d}")
    k = g.axis_frequencies()
    acc = spec.values
    for xi in x:
        acc = np.tensordot(np.exp(1j * k * xi), acc, axes=(0, 0))
    return float(acc.real) / (g.size * g.cell_volume)


def boundary_ratio(fld: RealField) -> float:
    """Largest |value| on the box faces relative to the largest |value| overall."""
    v = np.abs(fld.values)
    peak = v.max()
    if peak == 0:
        return 0.0
    edge = max(max(np.take(v, 0, axis=ax).max(), np.take(v, -1, axis=ax).max()) for ax in range(v.ndim))
    return float(edge / peak)


def convolve(f: RealField, g: RealField, guard: bool = True) -> RealField:
    """Periodic continuum-scaled convolution ``h^d sum_y f(y) g(x - y)``.

    With ``guard`` set, a :class:`WrapAroundRisk` warning is issued when either
    input has not decayed below ``1e-8`` of its peak at the box boundary.
    """
    if f.grid != g.grid:
        raise ValueError("convolution operands live on different grids")
    if guard:
        for name, fld in (("first", f), ("second", g)):
            ratio = boundary_ratio(fld)
            if ratio > WRAP_EPS:
                warnings.warn(
                    f"{name} operand has boundary/peak ratio {ratio:.2e} > {WRAP_EPS:g}; "
                    "periodic convolution will alias mass",
                    WrapAroundRisk,
                    stacklevel=2,
                )
    prod = dft_forward(f).values * dft_forward(g).values
    return dft_inverse(SpectralField(f.grid, prod), unit=f.unit)


def spectral_power(spec: SpectralField, k: int) -> SpectralField:
    """Pointwise k-th power by repeated squaring (transform of the k-fold convolution)."""
    if int(k) != k or k < 1:
        raise ValueError(f"power must be a positive integer, got {k!r}")
    k = int(k)
    base = np.array(spec.values)
    result = None
    while k:
        if k & 1:
            result = base.copy() if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return SpectralField(spec.grid, result)


def write_field_csv(fld: RealField, path, value_name: str = "value") -> None:
    """One row per lattice point: ``x1,...,xd,<value_name>``, row-major order."""
    g = fld.grid
    pts = g.points().reshape(-1, g.d)
    table = np.column_stack([pts, fld.values.reshape(-1)])
    header = ",".join([f"x{i + 1}" for i in range(g.d)] + [value_name])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, table, delimiter=",", fmt="%.17g")


def read_field_csv(path, grid: GridSpec) -> RealField:
    with open(path, encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    if len(header) != grid.d + 1:
        raise ValueError(f"{path}: expected {grid.d + 1} columns, found {len(header)}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if not np.allclose(table[:, : grid.d], grid.points().reshape(-1, grid.d), atol=1e-9 * grid.L):
        raise ValueError(f"{path}: coordinates do not match {grid}")
    return RealField(grid, table[:, -1].reshape(grid.shape))


def save_field(fld: RealField, path) -> None:
    """Binary round-trip format (npz with an explicit format version)."""
    g = fld.grid
    np.savez(path, version=FIELD_FORMAT_VERSION, d=g.d, n=g.n, L=g.L, unit=fld.unit, values=fld.values)


def load_field(path) -> RealField:
    with np.load(path) as data:
        version = int(data["version"])
        if version != FIELD_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported field format version {version}")
        grid = GridSpec(int(data["d"]), int(data["n"]), float(data["L"]))
        return RealField(grid, data["values"], str(data["unit"]))
