"""Node functionals on perturbed intervals, mollifier-weighted node functionals
and the L2-bounded commuting quasi-interpolation operators.

The weighted functional of a perturbed functional N~ is::

    Nbar(u) = int_{B_l} int_{B_r} eta_l(xl) eta_r(xr) N~_{[xl, xr]}(u) dxr dxl

Derivative-type functionals are integrated by parts so that only point values
of u are sampled; the resulting operators are well defined on L2(I_rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

from .fe1d import ElementPair, build_element
from .poly1d import (
    MOLLIFIER_PANELS,
    MOLLIFIER_POINTS,
    FieldLike,
    Mollifier,
    Polynomial1D,
    ScalarField1D,
    as_field,
    combine,
    gauss_rule,
    legendre,
)

DEFAULT_RHO = 0.2
PROJECTION_RHO = 0.05
MAX_CORRECTION_COND = 1e8


@dataclass(frozen=True)
class PerturbationConfig:
    """Perturbed interval [y_l, y_r] with y_l in B_rho(0) and y_r in B_rho(1)."""

    rho: float
    y_l: float
    y_r: float

    def __post_init__(self):
        if not (0.0 < self.rho <= 1.0 / 3.0):
            raise ValueError(
                f"perturbation radius out of range: rho = {self.rho!r}, require 0 < rho <= 1/3"
            )
        if not abs(self.y_l) < self.rho or not abs(self.y_r - 1.0) < self.rho:
            raise ValueError("perturbed end points must lie in B_rho(0) and B_rho(1)")
        if not self.y_l < self.y_r:
            raise ValueError("perturbed interval must satisfy y_l < y_r")

    @property
    def length(self) -> float:
        return self.y_r - self.y_l


def _values(u: ScalarField1D, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    fx = np.asarray(u.value(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError("non-finite field values")
    return fx


def tilde_node_values(e: ElementPair, cfg: PerturbationConfig, which: int,
                      u: FieldLike, npts: Optional[int] = None) -> np.ndarray:
    """Node functionals transported to [y_l, y_r].

    The integral functionals use l~_i(x) = l_i((x - y_l) / (y_r - y_l)), the
    orthogonal polynomials of the perturbed interval with l~_i(y_r) = 1.
    """
    u = as_field(u)
    m = e.order
    if npts is None:
        npts = m + 6
        if u.poly is not None:
            npts = max(npts, (u.poly.degree + m) // 2 + 2)
    t, wt = gauss_rule(npts)
    x = cfg.y_l + cfg.length * t
    ends = np.array([cfg.y_l, cfg.y_r])
    if which == 0:
        if u.derivative is None:
            raise ValueError("C1 data required: 0-form node functionals read u'")
        du = np.asarray(u.derivative(x), dtype=float)
        out = np.empty(m + 1)
        out[:2] = np.asarray(u.derivative(ends), dtype=float)
        for i in range(m - 2):
            out[i + 2] = cfg.length * (wt @ (legendre(i)(t) * du))
        uv = _values(u, ends)
        out[m] = uv[0] + uv[1]
        return out
    if which == 1:
        vx = _values(u, x)
        out = np.empty(m)
        out[:2] = _values(u, ends)
        for i in range(m - 2):
            out[i + 2] = cfg.length * (wt @ (legendre(i)(t) * vx))
        return out
    raise ValueError("which must be 0 or 1")


@dataclass(frozen=True, eq=False)
class QuasiOperator:
    """Quasi-interpolation pair Pi_0, Pi_1 for one element and mollifier.

    ``corrections[k]`` holds the matrix [Nbar^k_i(phi^k_j)] when the k-form
    operator has been made a projection; coefficients are then solved
    against it.
    """

    element: ElementPair
    mollifier: Mollifier
    inner_points: Optional[int] = None
    inner_panels: int = 1
    corrections: tuple = field(default=(None, None))

    @property
    def order(self) -> int:
        return self.element.order

    @property
    def rho(self) -> float:
        return self.mollifier.rho

    @cached_property
    def _grid(self):
        mol = self.mollifier
        xl, wl = mol.rule("l")
        xr, wr = mol.rule("r")
        q = self.inner_points or self.order + 6
        t, wt = gauss_rule(q)
        if self.inner_panels > 1:
            k = self.inner_panels
            t = ((np.arange(k)[:, None] + t[None, :]) / k).ravel()
            wt = np.tile(wt, k) / k
        length = xr[None, :] - xl[:, None]
        X = xl[:, None, None] + length[:, :, None] * t[None, None, :]
        return {
            "xl": xl,
            "xr": xr,
            "el": wl * mol.eta_l(xl),
            "er": wr * mol.eta_r(xr),
            "dl": wl * mol.eta_l_prime(xl),
            "dr": wr * mol.eta_r_prime(xr),
            "t": t,
            "wt": wt,
            "length": length,
            "X": X,
        }

    def with_corrections(self, corrections) -> QuasiOperator:
        return replace(self, corrections=tuple(corrections))


def quasi_operator(m: int = 3, rho: float = DEFAULT_RHO, panels: int = MOLLIFIER_PANELS,
                   points: int = MOLLIFIER_POINTS, inner_points: Optional[int] = None) -> QuasiOperator:
    return QuasiOperator(build_element(m), Mollifier(rho, panels, points), inner_points)


def weighted_node_values(op: QuasiOperator, which: int, u: FieldLike) -> np.ndarray:
    """Mollifier-weighted node functionals; reads only point values of u on I_rho."""
    u = as_field(u)
    g = op._grid
    m = op.order
    ul = _values(u, g["xl"])
    ur = _values(u, g["xr"])
    if which == 0:
        out = np.empty(m + 1)
        # int eta u' = -int eta' u
        out[0] = -(g["dl"] @ ul)
        out[1] = -(g["dr"] @ ur)
        W = g["el"][:, None] * g["er"][None, :]
        if m > 3:
            uX = _values(u, g["X"])
        for i in range(m - 2):
            # int_{xl}^{xr} l~_i u' = u(xr) - (-1)^i u(xl) - int l~_i' u
            # and the inner integral of l~_i' u is length-free in t
            sign = -1.0 if i % 2 else 1.0
            inner = ur[None, :] - sign * ul[:, None]
            if i > 0:
                dli = legendre(i).deriv()(g["t"])
                inner = inner - uX @ (g["wt"] * dli)
            out[i + 2] = np.sum(W * inner)
        out[m] = g["el"] @ ul + g["er"] @ ur
        return out
    if which == 1:
        out = np.empty(m)
        out[0] = g["el"] @ ul
        out[1] = g["er"] @ ur
        W = g["el"][:, None] * g["er"][None, :] * g["length"]
        vX = _values(u, g["X"])
        for i in range(m - 2):
            li = legendre(i)(g["t"])
            out[i + 2] = np.sum(W * (vX @ (g["wt"] * li)))
        return out
    raise ValueError("which must be 0 or 1")


def quasi_coefficients(op: QuasiOperator, which: int, u: FieldLike) -> np.ndarray:
    """Coefficients of Pi_which u in the nodal basis (zero for a mismatched form tag)."""
    u = as_field(u)
    if which not in (0, 1):
        raise ValueError("which must be 0 or 1")
    dim = op.order + 1 - which
    if u.form is not None and u.form != which:
        return np.zeros(dim)
    c = weighted_node_values(op, which, u)
    M = op.corrections[which]
    if M is not None:
        c = np.linalg.solve(M, c)
    return c


def quasi_interpolate(op: QuasiOperator, which: int, u: FieldLike) -> Polynomial1D:
    c = quasi_coefficients(op, which, u)
    if not np.any(c):
        return Polynomial1D.zero()
    return combine(c, op.element.basis(which))


def stability_constants(op: QuasiOperator) -> tuple[float, float]:
    """Closed-form L2(I_rho) bounds (C_Pi0, C_Pi1) for the cubic pair."""
    if op.order != 3:
        raise ValueError("constants defined only for cubic pair; use empirical_norm")
    rho = op.rho
    a, b = -rho, 1.0 + rho
    n0 = [p.norm(a, b) for p in op.element.basis0]
    n1 = [p.norm(a, b) for p in op.element.basis1]
    eta = op.mollifier.eta_l2
    deta = op.mollifier.eta_prime_l2
    c0 = rho ** -1.5 * deta * (n0[0] + n0[1]) + 2.0 * rho ** -0.5 * eta * (n0[2] + n0[3])
    c1 = rho ** -0.5 * eta * (n1[0] + n1[1]) + math.sqrt(1.0 + 2.0 * rho) * n1[2]
    return c0, c1


def correction_matrix(op: QuasiOperator, which: int) -> np.ndarray:
    """[Nbar_i(phi_j)]: the uncorrected operator restricted to the polynomial space."""
    base = op.with_corrections((None, None))
    return np.column_stack([
        weighted_node_values(base, which, ScalarField1D.from_polynomial(p))
        for p in op.element.basis(which)
    ])


def projection_correct(op: QuasiOperator, which: Iterable[int] | int = (0, 1)) -> QuasiOperator:
    """Return Pi^ = (Pi restricted to the polynomial space)^{-1} Pi."""
    kinds = (which,) if isinstance(which, int) else tuple(which)
    corr = list(op.corrections)
    for k in kinds:
        M = correction_matrix(op, k)
        cond = np.linalg.cond(M)
        if not cond <= MAX_CORRECTION_COND:
            raise ValueError(
                f"rho too large for projection correction: cond = {cond:.3e} at rho = {op.rho}"
            )
        corr[k] = M
    return op.with_corrections(corr)


def rough_field(rng: np.random.Generator, rho: float, knots: int = 32,
                form: Optional[int] = None) -> tuple[ScalarField1D, float]:
    """Piecewise-linear interpolant of uniform samples on I_rho and its exact L2 norm."""
    xs = np.linspace(-rho, 1.0 + rho, knots)
    ys = rng.uniform(-1.0, 1.0, knots)
    h = np.diff(xs)
    a, b = ys[:-1], ys[1:]
    norm = math.sqrt(float(np.sum(h * (a * a + a * b + b * b) / 3.0)))
    f = ScalarField1D(value=lambda x, xs=xs, ys=ys: np.interp(x, xs, ys), form=form)
    return f, norm


def empirical_norm(op: QuasiOperator, which: int, fields) -> float:
    """sup ||Pi u||_{L2(I_rho)} / ||u||_{L2(I_rho)} over (field, norm) pairs."""
    a, b = -op.rho, 1.0 + op.rho
    worst = 0.0
    for u, nu in fields:
        pu = quasi_interpolate(op, which, u)
        worst = max(worst, pu.norm(a, b) / nu)
    return worst
