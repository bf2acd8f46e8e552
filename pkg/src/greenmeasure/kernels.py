"""Radial jump kernels a(x) on R^d.

Four families are supported, each normalized to unit mass so that the jump
generator ``L f = a * f - f`` drives a unit-rate compound Poisson process:

========== ================================== =====================
family     density (up to normalization)      tail class
========== ================================== =====================
gauss      exp(-b |x|^2 / 2)                  LightGaussian
exp        exp(-delta |x|)                    LightExponential
moderate   (1 + |x|/scale)^-(d + gamma)       Moderate, gamma > 2
heavy      (1 + |x|/scale)^-(d + gamma)       Heavy, 0 < gamma < 2
========== ================================== =====================

Kernels are written on the command line as ``gauss:b=1,dim=3`` and so on;
see :func:`parse_kernel_spec`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import InfiniteMoment, SpecError, UnsupportedAnalytic, ValidationError

__all__ = [
    "TailClass",
    "JumpKernel",
    "KernelMoments",
    "parse_kernel_spec",
    "kernel_density",
    "kernel_fourier",
    "kernel_moments",
    "sample_jump",
    "validate_kernel",
    "sphere_area",
]

MASS_TOL = 1e-6
QUAD_ABS_TOL = 1e-9


class TailClass(enum.Enum):
    LIGHT_GAUSSIAN = "LightGaussian"
    LIGHT_EXPONENTIAL = "LightExponential"
    MODERATE = "Moderate"
    HEAVY = "Heavy"


_FAMILIES = {
    "gauss": ("b", TailClass.LIGHT_GAUSSIAN),
    "exp": ("delta", TailClass.LIGHT_EXPONENTIAL),
    "moderate": ("gamma", TailClass.MODERATE),
    "heavy": ("gamma", TailClass.HEAVY),
}


def _fmt(v: float) -> str:
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True)
class JumpKernel:
    """A normalized, symmetric, radial jump density.

    ``param`` is the family parameter: ``b`` for gauss, ``delta`` for exp and
    ``gamma`` for moderate/heavy. ``scale`` is the length scale of the
    polynomial families and is ignored by the others.
    """

    family: str
    dim: int
    param: float
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise SpecError(f"unknown kernel family {self.family!r}")
        name = _FAMILIES[self.family][0]
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise SpecError(f"dim must be a positive integer, got {self.dim!r}")
        if not (math.isfinite(self.param) and self.param > 0):
            raise SpecError(f"{name} must be positive and finite, got {self.param!r}")
        if self.family == "moderate" and not self.param > 2:
            raise SpecError(f"gamma must exceed 2 for a moderate tail, got {self.param!r}")
        if self.family == "heavy" and not self.param < 2:
            raise SpecError(f"gamma must lie in (0, 2) for a heavy tail, got {self.param!r}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise SpecError(f"scale must be positive, got {self.scale!r}")

    @property
    def tail_class(self) -> TailClass:
        return _FAMILIES[self.family][1]

    @property
    def param_name(self) -> str:
        return _FAMILIES[self.family][0]

    @property
    def is_polynomial(self) -> bool:
        return self.family in ("moderate", "heavy")

    @property
    def length_scale(self) -> float:
        """Characteristic jump length, used to split radial quadratures."""
        if self.family == "gauss":
            return 1.0 / math.sqrt(self.param)
        if self.family == "exp":
            return 1.0 / self.param
        return self.scale

    @property
    def norm_const(self) -> float:
        d, p = self.dim, self.param
        if self.family == "gauss":
            return (p / (2 * math.pi)) ** (d / 2)
        if self.family == "exp":
            return p**d / (sphere_area(d) * math.gamma(d))
        # int_0^inf u^(d-1) (1+u)^-(d+gamma) du = B(d, gamma)
        return 1.0 / (sphere_area(d) * self.scale**d * float(special.beta(d, p)))

    @property
    def sup_density(self) -> float:
        return self.norm_const

    def profile(self, r):
        """Unnormalized radial profile phi(r), phi(0) = 1."""
        r = np.asarray(r, dtype=float)
        if self.family == "gauss":
            return np.exp(-0.5 * self.param * r * r)
        if self.family == "exp":
            return np.exp(-self.param * r)
        return (1.0 + r / self.scale) ** (-(self.dim + self.param))

    def radial_density(self, r):
        return self.norm_const * self.profile(r)

    def radial_cdf(self, r):
        """P(|X| <= r) for a single jump X."""
        r = np.maximum(np.asarray(r, dtype=float), 0.0)
        d = self.dim
        if self.family == "gauss":
            return special.gammainc(d / 2, 0.5 * self.param * r * r)
        if self.family == "exp":
            return special.gammainc(d, self.param * r)
        u = r / self.scale
        return special.betainc(d, self.param, u / (1.0 + u))

    def radial_sf(self, r):
        """P(|X| > r), computed without cancellation in the far tail."""
        r = np.maximum(np.asarray(r, dtype=float), 0.0)
        d = self.dim
        if self.family == "gauss":
            return special.gammaincc(d / 2, 0.5 * self.param * r * r)
        if self.family == "exp":
            return special.gammaincc(d, self.param * r)
        u = r / self.scale
        return special.betainc(self.param, d, 1.0 / (1.0 + u))

    def has_analytic_fourier(self) -> bool:
        return self.family in ("gauss", "exp")

    def fourier_radial(self, kabs):
        """Analytic a_hat(|k|) for the gauss and exp families."""
        k = np.asarray(kabs, dtype=float)
        if self.family == "gauss":
            return np.exp(-0.5 * k * k / self.param)
        if self.family == "exp":
            return (1.0 + (k / self.param) ** 2) ** (-(self.dim + 1) / 2)
        raise UnsupportedAnalytic(f"no closed-form Fourier transform for {self.family!r}")

    def one_minus_fourier(self, kabs):
        """1 - a_hat(|k|) without cancellation near k = 0 (analytic families)."""
        k = np.asarray(kabs, dtype=float)
        if self.family == "gauss":
            return -np.expm1(-0.5 * k * k / self.param)
        if self.family == "exp":
            return -np.expm1(-0.5 * (self.dim + 1) * np.log1p((k / self.param) ** 2))
        raise UnsupportedAnalytic(f"no closed-form Fourier transform for {self.family!r}")

    def recommended_half_width(self) -> float:
        """Box half-width that keeps boundary density below 1e-8 of the peak."""
        if self.family == "gauss":
            return 8.0 / math.sqrt(self.param)
        if self.family == "exp":
            return 40.0 / self.param
        return self.scale * (1e-8 ** (-1.0 / (self.dim + self.param)) - 1.0)

    def spec_string(self) -> str:
        s = f"{self.family}:{self.param_name}={_fmt(self.param)},dim={self.dim}"
        if self.is_polynomial and self.scale != 1.0:
            s += f",scale={_fmt(self.scale)}"
        return s

    def __str__(self):
        return self.spec_string()


@dataclass(frozen=True)
class KernelMoments:
    mass: float
    second_moment: float  # math.inf for heavy tails
    sup_density: float

    @property
    def second_moment_finite(self) -> bool:
        return math.isfinite(self.second_moment)


def parse_kernel_spec(spec: str, dim: int | None = None) -> JumpKernel:
    """Parse ``family:key=value[,key=value...]``.

    >>> parse_kernel_spec("gauss:b=1", dim=3)
    JumpKernel(family='gauss', dim=3, param=1.0, scale=1.0)
    """
    if not isinstance(spec, str) or ":" not in spec:
        raise SpecError(f"kernel spec must look like 'family:key=value', got {spec!r}")
    family, _, rest = spec.strip().partition(":")
    family = family.strip().lower()
    if family not in _FAMILIES:
        raise SpecError(f"unknown kernel family {family!r}; expected one of {sorted(_FAMILIES)}")
    pname = _FAMILIES[family][0]
    fields = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq:
            raise SpecError(f"kernel field {item!r} is missing '='")
        if key not in (pname, "dim", "scale"):
            raise SpecError(f"unknown field {key!r} for kernel family {family!r}")
        fields[key] = value.strip()
    if pname not in fields:
        raise SpecError(f"kernel family {family!r} requires field {pname!r}")
    try:
        param = float(fields[pname])
    except ValueError:
        raise SpecError(f"field {pname!r} is not a number: {fields[pname]!r}") from None
    if "dim" in fields:
        try:
            spec_dim = int(fields["dim"])
        except ValueError:
            raise SpecError(f"field 'dim' is not an integer: {fields['dim']!r}") from None
        if dim is not None and dim != spec_dim:
            raise SpecError(f"field 'dim' ({spec_dim}) conflicts with dimension {dim}")
        dim = spec_dim
    if dim is None:
        raise SpecError("kernel dimension missing; pass dim=<int> or --dim")
    try:
        scale = float(fields.get("scale", 1.0))
    except ValueError:
        raise SpecError(f"field 'scale' is not a number: {fields['scale']!r}") from None
    try:
        return JumpKernel(family, int(dim), param, scale)
    except SpecError as exc:
        raise SpecError(f"{exc} (field {pname!r} in {spec!r})") from None


def kernel_density(kernel: JumpKernel, x):
    """a(x) at a point, or at an array of points with the last axis of length d."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (kernel.dim,):
        raise ValueError(f"expected points of dimension {kernel.dim}, got shape {x.shape}")
    return kernel.radial_density(np.sqrt(np.sum(x * x, axis=-1)))


def _radial_quad(func, kernel: JumpKernel) -> float:
    s = kernel.length_scale
    parts = [(0.0, s), (s, 20 * s), (20 * s, np.inf)]
    total = 0.0
    for lo, hi in parts:
        val, err = integrate.quad(func, lo, hi, epsabs=QUAD_ABS_TOL / 3, epsrel=1e-12, limit=400)
        total += val
    return total


def _numeric_fourier_radial(kernel: JumpKernel, kabs: float) -> float:
    d = kernel.dim
    c = kernel.norm_const
    if kabs == 0.0:
        area = sphere_area(d)
        return _radial_quad(lambda r: area * c * kernel.profile(r) * r ** (d - 1), kernel)
    if d == 1:
        val, _ = integrate.quad(lambda r: kernel.profile(r), 0, np.inf, weight="cos", wvar=kabs, limlst=200)
        return 2 * c * val
    if d == 3:
        val, _ = integrate.quad(lambda r: r * kernel.profile(r), 0, np.inf, weight="sin", wvar=kabs, limlst=200)
        return 4 * math.pi * c * val / kabs
    import mpmath

    nu = d / 2 - 1
    prof = kernel.profile

    def integrand(r):
        return float(prof(float(r))) * mpmath.besselj(nu, kabs * r) * r ** (d / 2)

    val = mpmath.quadosc(integrand, [0, mpmath.inf], omega=kabs)
    return float(c * (2 * math.pi) ** (d / 2) * kabs ** (1 - d / 2) * val)


def kernel_fourier(kernel: JumpKernel, k, analytic: bool | None = None):
    """Fourier image a_hat(k) = int cos(k.y) a(y) dy.

    ``k`` is a frequency vector or an array of them (last axis d). With
    ``analytic=None`` the closed form is used when the family has one and
    radial quadrature otherwise; ``analytic=True`` demands the closed form.
    """
    k = np.asarray(k, dtype=float)
    if k.shape[-1:] != (kernel.dim,):
        raise ValueError(f"expected frequencies of dimension {kernel.dim}, got shape {k.shape}")
    kabs = np.sqrt(np.sum(k * k, axis=-1))
    if analytic or (analytic is None and kernel.has_analytic_fourier()):
        return kernel.fourier_radial(kabs)
    flat = np.array([_numeric_fourier_radial(kernel, float(v)) for v in np.ravel(kabs)])
    return flat.reshape(kabs.shape) if kabs.ndim else float(flat[0])


def kernel_moments(kernel: JumpKernel, require_finite: bool = False) -> KernelMoments:
    """Mass, second moment E|X|^2 and sup of the density, by radial quadrature."""
    d = kernel.dim
    c = kernel.norm_const
    area = sphere_area(d)
    mass = _radial_quad(lambda r: area * c * kernel.profile(r) * r ** (d - 1), kernel)
    if kernel.tail_class is TailClass.HEAVY:
        if require_finite:
            raise InfiniteMoment(f"{kernel}: second moment is infinite for gamma < 2")
        sigma2 = math.inf
    else:
        sigma2 = _radial_quad(lambda r: area * c * kernel.profile(r) * r ** (d + 1), kernel)
    return KernelMoments(mass=mass, second_moment=sigma2, sup_density=kernel.sup_density)


def validate_kernel(kernel: JumpKernel, seed: int = 0) -> KernelMoments:
    """Check unit mass and symmetry; raise :class:`ValidationError` on failure."""
    mom = kernel_moments(kernel)
    if abs(mom.mass - 1.0) > MASS_TOL:
        raise ValidationError(f"{kernel}: quadrature mass {mom.mass!r} differs from 1 by more than {MASS_TOL}")
    rng = np.random.default_rng(seed)
    x = rng.normal(scale=3 * kernel.length_scale, size=(1000, kernel.dim))
    a, b = kernel_density(kernel, x), kernel_density(kernel, -x)
    if np.any(np.abs(a - b) > 1e-12 * np.maximum(a, b)):
        raise ValidationError(f"{kernel}: density is not symmetric")
    return mom


def sample_jump(kernel: JumpKernel, rng: np.random.Generator, size=None):
    """Draw jump displacements with density a.

    Returns shape ``(d,)`` when ``size`` is None, else ``(*size, d)``.
    """
    shape = () if size is None else ((size,) if np.ndim(size) == 0 else tuple(size))
    d = kernel.dim
    if kernel.family == "gauss":
        return rng.standard_normal(shape + (d,)) / math.sqrt(kernel.param)
    direction = rng.standard_normal(shape + (d,))
    direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    if kernel.family == "exp":
        radius = rng.gamma(d, 1.0 / kernel.param, size=shape)
    else:
        # |X|/scale is beta-prime(d, gamma): ratio of independent gammas
        radius = kernel.scale * rng.gamma(d, size=shape) / rng.gamma(kernel.param, size=shape)
    return direction * np.asarray(radius)[..., None]
