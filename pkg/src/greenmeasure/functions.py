"""Bounded, integrable test functions f (the space CL(R^d)).

Potentials V(f, x) are only computed for functions that are continuous,
bounded and absolutely integrable, with norm ``||f||_inf + ||f||_1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from .errors import SpecError
from .kernels import sphere_area
from .spectral import GridSpec, RealField

__all__ = [
    "TestFunction",
    "GaussianBump",
    "CompactBump",
    "GridFunction",
    "ZeroFunction",
    "parse_test_function",
]


class TestFunction:
    """Base class; subclasses implement ``__call__`` on arrays of points."""

    __test__ = False  # keep pytest from collecting this as a test class
    dim: int

    def __call__(self, y) -> np.ndarray:
        raise NotImplementedError

    @property
    def sup_norm(self) -> float:
        raise NotImplementedError

    @property
    def l1_norm(self) -> float:
        raise NotImplementedError

    @property
    def integral(self) -> float:
        raise NotImplementedError

    @property
    def cl_norm(self) -> float:
        return self.sup_norm + self.l1_norm

    def negligible_radius(self, eps: float):
        """``(center, R)`` with |f| <= eps outside the ball B(center, R)."""
        return None

    def radial_profile(self, rho):
        """``f(center + rho w)`` for |w| = 1 when f is radial about ``center``; else None."""
        return None

    def on_grid(self, grid: GridSpec) -> RealField:
        return RealField(grid, np.broadcast_to(self(grid.points()), grid.shape))

    def to_dict(self) -> dict:
        raise NotImplementedError


def _as_center(center, dim):
    c = tuple(float(v) for v in np.ravel(center))
    if len(c) == 1 and dim > 1:
        c = c * dim
    if len(c) != dim:
        raise SpecError(f"center has {len(c)} coordinates, expected {dim}")
    return c


@dataclass(frozen=True)
class GaussianBump(TestFunction):
    """``height * exp(-|y - center|^2 / (2 width^2))``."""

    dim: int
    width: float = 1.0
    height: float = 1.0
    center: tuple = (0.0,)

    def __post_init__(self):
        if not self.width > 0:
            raise SpecError(f"bump width must be positive, got {self.width!r}")
        object.__setattr__(self, "center", _as_center(self.center, self.dim))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        z = y - np.asarray(self.center)
        return self.height * np.exp(-0.5 * np.sum(z * z, axis=-1) / self.width**2)

    @property
    def sup_norm(self):
        return abs(self.height)

    @property
    def integral(self):
        return self.height * (2 * math.pi * self.width**2) ** (self.dim / 2)

    @property
    def l1_norm(self):
        return abs(self.integral)

    def radial_profile(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.height * np.exp(-0.5 * rho * rho / self.width**2)

    def negligible_radius(self, eps):
        if abs(self.height) <= eps:
            return self.center, 0.0
        if eps <= 0:
            return self.center, math.inf
        return self.center, self.width * math.sqrt(2 * math.log(abs(self.height) / eps))

    def to_dict(self):
        return {"family": "gauss", "width": self.width, "height": self.height, "center": list(self.center)}


@dataclass(frozen=True)
class CompactBump(TestFunction):
    """Smooth bump ``height * exp(1 - 1/(1 - s^2))``, ``s = |y - center|/radius < 1``."""

    dim: int
    radius: float = 1.0
    height: float = 1.0
    center: tuple = (0.0,)

    def __post_init__(self):
        if not self.radius > 0:
            raise SpecError(f"bump radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", _as_center(self.center, self.dim))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        z = y - np.asarray(self.center)
        s2 = np.sum(z * z, axis=-1) / self.radius**2
        inside = s2 < 1
        out = np.zeros(np.shape(s2))
        out[inside] = self.height * np.exp(1 - 1 / (1 - s2[inside]))
        return out if out.ndim else float(out)

    @property
    def sup_norm(self):
        return abs(self.height)

    @property
    def integral(self):
        d = self.dim
        val, _ = integrate.quad(lambda s: math.exp(1 - 1 / (1 - s * s)) * s ** (d - 1), 0, 1, epsabs=1e-13)
        return self.height * sphere_area(d) * self.radius**d * val

    @property
    def l1_norm(self):
        return abs(self.integral)

    def radial_profile(self, rho):
        s2 = np.asarray(rho, dtype=float) ** 2 / self.radius**2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s2 < 1, self.height * np.exp(1 - 1 / (1 - np.minimum(s2, 1 - 1e-300))), 0.0)

    def negligible_radius(self, eps):
        return self.center, self.radius

    def to_dict(self):
        return {"family": "compact", "radius": self.radius, "height": self.height, "center": list(self.center)}


@dataclass(frozen=True)
class ZeroFunction(TestFunction):
    dim: int

    def __call__(self, y):
        return np.zeros(np.shape(y)[:-1])

    sup_norm = l1_norm = integral = property(lambda self: 0.0)

    def negligible_radius(self, eps):
        return (0.0,) * self.dim, 0.0

    def radial_profile(self, rho):
        return np.zeros(np.shape(rho))

    @property
    def center(self):
        return (0.0,) * self.dim

    def to_dict(self):
        return {"family": "zero"}


class GridFunction(TestFunction):
    """Custom f given by lattice samples; multilinear in between, zero outside the box."""

    def __init__(self, field: RealField):
        self.field = field
        self.dim = field.grid.d
        axis = field.grid.axis()
        self._interp = RegularGridInterpolator(
            [axis] * self.dim, field.values, method="linear", bounds_error=False, fill_value=0.0
        )

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self._interp(y.reshape(-1, self.dim)).reshape(y.shape[:-1])

    def on_grid(self, grid):
        if grid == self.field.grid:
            return self.field
        return super().on_grid(grid)

    @property
    def sup_norm(self):
        return float(np.abs(self.field.values).max())

    @property
    def l1_norm(self):
        return float(np.abs(self.field.values).sum() * self.field.grid.cell_volume)

    @property
    def integral(self):
        return self.field.mass()

    def negligible_radius(self, eps):
        g = self.field.grid
        big = np.abs(self.field.values) > eps
        if not big.any():
            return (0.0,) * self.dim, 0.0
        return (0.0,) * self.dim, float(g.radius()[big].max() + math.sqrt(self.dim) * g.h)

    def to_dict(self):
        return {"family": "grid", "grid": self.field.grid.to_dict()}


def parse_test_function(spec: str, dim: int) -> TestFunction:
    """Parse ``gauss:width=1,height=1,center=0;0;0`` or ``compact:radius=1,...``."""
    family, _, rest = spec.strip().partition(":")
    family = family.strip().lower()
    allowed = {"gauss": ("width", "height", "center"), "compact": ("radius", "height", "center")}
    if family == "zero":
        return ZeroFunction(dim)
    if family not in allowed:
        raise SpecError(f"unknown test function family {family!r}; expected gauss, compact or zero")
    kwargs = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq or key not in allowed[family]:
            raise SpecError(f"bad test function field {item!r} for family {family!r}")
        try:
            if key == "center":
                kwargs[key] = tuple(float(v) for v in value.split(";"))
            else:
                kwargs[key] = float(value)
        except ValueError:
            raise SpecError(f"field {key!r} is not numeric: {value!r}") from None
    cls = GaussianBump if family == "gauss" else CompactBump
    return cls(dim=dim, **kwargs)
