"""Polynomials on the unit interval, shifted Legendre families, Gauss
quadrature and the standard mollifier.

Polynomials are stored by their monomial coefficients (index = power). All
calculus on them is done on the coefficients, so it is exact up to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cache
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial import Legendre, Polynomial
from numpy.polynomial import legendre as L

MAX_ORDER = 12

_UNIT = np.array([0.0, 1.0])
_STD = np.array([-1.0, 1.0])

# composite Gauss rule used for every mollifier integral
MOLLIFIER_PANELS = 8
MOLLIFIER_POINTS = 30


class Polynomial1D:
    """Real polynomial on [0, 1].

    Stored internally as a shifted-Legendre series (numpy ``Legendre`` with
    domain [0, 1]); ``coeffs`` gives the monomial coefficients. Exact trailing
    zeros are trimmed; the zero polynomial has degree 0. Instances are
    immutable and callable on arrays.
    """

    __slots__ = ("_s",)

    def __init__(self, coeffs=None, *, series: Optional[Legendre] = None):
        if series is None:
            c = np.array(coeffs, dtype=float).ravel()
            series = Polynomial(c if c.size else [0.0]).convert(kind=Legendre, domain=_UNIT)
        c = np.array(series.coef, dtype=float)
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        c.setflags(write=False)
        self._s = Legendre(c, domain=_UNIT)

    @classmethod
    def from_legendre(cls, c) -> Polynomial1D:
        """Build from shifted-Legendre coefficients."""
        return cls(series=Legendre(np.asarray(c, dtype=float), domain=_UNIT))

    @classmethod
    def zero(cls) -> Polynomial1D:
        return cls.from_legendre([0.0])

    @classmethod
    def constant(cls, value: float) -> Polynomial1D:
        return cls.from_legendre([value])

    @property
    def coeffs(self) -> np.ndarray:
        """Monomial coefficients, index = power."""
        return self._s.convert(kind=Polynomial, domain=_STD, window=_STD).coef

    @property
    def legendre_coeffs(self) -> np.ndarray:
        return self._s.coef

    @property
    def degree(self) -> int:
        return self._s.coef.size - 1

    def is_zero(self) -> bool:
        return self._s.coef.size == 1 and self._s.coef[0] == 0.0

    def __call__(self, x):
        return self._s(x)

    def deriv(self, times: int = 1) -> Polynomial1D:
        if self.degree < times:
            return Polynomial1D.zero()
        return Polynomial1D(series=self._s.deriv(times))

    def antideriv(self) -> Polynomial1D:
        """Antiderivative vanishing at x = 0."""
        return Polynomial1D(series=self._s.integ(lbnd=0.0))

    def integral(self, a: float = 0.0, b: float = 1.0) -> float:
        F = self._s.integ()
        return float(F(b) - F(a))

    def inner(self, other: Polynomial1D, a: float = 0.0, b: float = 1.0) -> float:
        return (self * other).integral(a, b)

    def norm(self, a: float = 0.0, b: float = 1.0) -> float:
        return math.sqrt(max(self.inner(self, a, b), 0.0))

    def __add__(self, other):
        if isinstance(other, Polynomial1D):
            return Polynomial1D(series=self._s + other._s)
        return Polynomial1D(series=self._s + float(other))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial1D(series=-self._s)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial1D):
            return Polynomial1D(series=self._s * other._s)
        return Polynomial1D(series=self._s * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other: float):
        return Polynomial1D(series=self._s / float(other))

    def __eq__(self, other):
        if not isinstance(other, Polynomial1D):
            return NotImplemented
        return np.array_equal(self._s.coef, other._s.coef)

    def __hash__(self):
        return hash(self._s.coef.tobytes())

    def __repr__(self):
        return f"Polynomial1D({np.round(self.coeffs, 15).tolist()})"

    def coeff_distance(self, other: Polynomial1D) -> float:
        """Max-norm distance between the stored shifted-Legendre coefficient vectors.

        Monomial coefficients of degree-m polynomials bounded on [0,1] grow
        like 6^m, so they are a poor yardstick for "coefficient error".
        """
        a, b = self.legendre_coeffs, other.legendre_coeffs
        n = max(a.size, b.size)
        return float(np.max(np.abs(np.pad(a, (0, n - a.size)) - np.pad(b, (0, n - b.size)))))


def combine(coeffs, polys) -> Polynomial1D:
    """Linear combination sum_i coeffs[i] * polys[i]."""
    out = np.zeros(1)
    for c, p in zip(coeffs, polys):
        out = L.legadd(out, float(c) * p.legendre_coeffs)
    return Polynomial1D.from_legendre(out)


@dataclass(frozen=True)
class ScalarField1D:
    """A black-box real function on an interval.

    ``derivative`` is only read by the canonical 0-form functionals.
    ``form`` tags the field as a 0-form or 1-form (None = untagged).
    ``poly`` is set when the field is known to be a polynomial, which lets
    node functionals integrate exactly.
    """

    value: Callable
    derivative: Optional[Callable] = None
    form: Optional[int] = None
    poly: Optional[Polynomial1D] = field(default=None, compare=False)

    @classmethod
    def from_polynomial(cls, p: Polynomial1D, form: Optional[int] = None) -> ScalarField1D:
        return cls(value=p, derivative=p.deriv(), form=form, poly=p)

    def with_form(self, form: Optional[int]) -> ScalarField1D:
        return ScalarField1D(self.value, self.derivative, form, self.poly)

    def d(self) -> ScalarField1D:
        """The exterior derivative, a 1-form field (requires ``derivative``)."""
        if self.derivative is None:
            raise ValueError("C1 data required: field has no derivative")
        if self.poly is not None:
            return ScalarField1D.from_polynomial(self.poly.deriv(), form=1)
        return ScalarField1D(value=self.derivative, form=1)

    def __call__(self, x):
        return self.value(x)


FieldLike = Union[ScalarField1D, Polynomial1D, Callable]


def as_field(u: FieldLike) -> ScalarField1D:
    if isinstance(u, ScalarField1D):
        return u
    if isinstance(u, Polynomial1D):
        return ScalarField1D.from_polynomial(u)
    if callable(u):
        return ScalarField1D(value=u)
    raise TypeError(f"cannot interpret {type(u).__name__} as a field")


def _check_order(m: int) -> None:
    if m > MAX_ORDER:
        raise ValueError(f"order overflow: {m} exceeds the maximum order {MAX_ORDER}")


@cache
def legendre(m: int) -> Polynomial1D:
    """Shifted Legendre polynomial of degree m on [0, 1] with value 1 at x = 1.

    The internal representation is the shifted-Legendre series itself, so this
    is a unit coefficient vector.
    """
    if m < 0:
        raise ValueError("legendre order must be non-negative")
    _check_order(m)
    c = np.zeros(m + 1)
    c[m] = 1.0
    return Polynomial1D.from_legendre(c)


@cache
def integrated_legendre(m: int, times: int = 1) -> Polynomial1D:
    """L_m (times=1) or K_m (times=2): antiderivatives of legendre(m) vanishing at 0."""
    if m < 1:
        raise ValueError("integrated Legendre polynomials need m >= 1")
    if times not in (1, 2):
        raise ValueError("times must be 1 or 2")
    # K_m has degree m + 2
    _check_order(m + times - 1)
    p = legendre(m).antideriv()
    return p.antideriv() if times == 2 else p


@cache
def gauss_rule(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if npts < 1:
        raise ValueError("npts must be >= 1")
    x, w = np.polynomial.legendre.leggauss(npts)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(a: float, b: float, npts: int, panels: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite Gauss rule on [a, b]."""
    if not a < b:
        raise ValueError("integration bounds must satisfy a < b")
    x, w = gauss_rule(npts)
    edges = np.linspace(a, b, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def gauss_integrate(f: FieldLike, a: float, b: float, npts: int, panels: int = 1) -> float:
    """Composite Gauss-Legendre approximation of the integral of f over [a, b]."""
    x, w = composite_rule(a, b, npts, panels)
    fx = np.asarray(as_field(f).value(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError("non-finite integrand")
    return float(np.dot(w, fx))


def _bump(x):
    """exp(1/(x^2 - 1)) on |x| < 1, zero elsewhere (unnormalized)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 / (xi * xi - 1.0))
    return out


def _bump_deriv(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    s = xi * xi - 1.0
    out[inside] = np.exp(1.0 / s) * (-2.0 * xi / (s * s))
    return out


@cache
def _bump_integrals() -> tuple[float, float, float]:
    """Integral of the bump and the squared L2 norms of bump and bump'.

    Computed once with the mollifier rule at double resolution.
    """
    x, w = composite_rule(-1.0, 1.0, 2 * MOLLIFIER_POINTS, 2 * MOLLIFIER_PANELS)
    b = _bump(x)
    db = _bump_deriv(x)
    return float(w @ b), float(w @ (b * b)), float(w @ (db * db))


def mollifier_constant() -> float:
    """Normalization constant C making the standard mollifier integrate to 1."""
    return 1.0 / _bump_integrals()[0]


@dataclass(frozen=True)
class Mollifier:
    """Standard mollifier scaled to the balls B_rho(0) and B_rho(1).

    ``panels`` x ``points`` is the composite Gauss rule used on each ball.
    """

    rho: float
    panels: int = MOLLIFIER_PANELS
    points: int = MOLLIFIER_POINTS

    def __post_init__(self):
        if not (0.0 < self.rho <= 1.0 / 3.0):
            raise ValueError(
                f"perturbation radius out of range: rho = {self.rho!r}, "
                "require 0 < rho <= 1/3"
            )
        if self.panels < 1 or self.points < 1:
            raise ValueError("quadrature panels and points must be positive")

    @property
    def C(self) -> float:
        return mollifier_constant()

    # unscaled, normalized eta on R
    def eta(self, x):
        return self.C * _bump(x)

    def eta_prime(self, x):
        return self.C * _bump_deriv(x)

    @property
    def eta_l2(self) -> float:
        """L2(R) norm of eta."""
        return self.C * math.sqrt(_bump_integrals()[1])

    @property
    def eta_prime_l2(self) -> float:
        return self.C * math.sqrt(_bump_integrals()[2])

    def _center(self, side: str) -> float:
        if side == "l":
            return 0.0
        if side == "r":
            return 1.0
        raise ValueError("side must be 'l' or 'r'")

    def weight(self, side: str, x):
        """eta_l or eta_r."""
        c = self._center(side)
        return self.eta((np.asarray(x) - c) / self.rho) / self.rho

    def weight_prime(self, side: str, x):
        """Derivative of eta_l or eta_r."""
        c = self._center(side)
        return self.eta_prime((np.asarray(x) - c) / self.rho) / self.rho**2

    def eta_l(self, x):
        return self.weight("l", x)

    def eta_r(self, x):
        return self.weight("r", x)

    def eta_l_prime(self, x):
        return self.weight_prime("l", x)

    def eta_r_prime(self, x):
        return self.weight_prime("r", x)

    def ball(self, side: str) -> tuple[float, float]:
        c = self._center(side)
        return c - self.rho, c + self.rho

    def rule(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        """Composite Gauss nodes and plain weights on the ball around an endpoint."""
        a, b = self.ball(side)
        return composite_rule(a, b, self.points, self.panels)


def mollifier_weights(rho: float, panels: int = MOLLIFIER_PANELS,
                      points: int = MOLLIFIER_POINTS) -> Mollifier:
    return Mollifier(rho=rho, panels=panels, points=points)
