"""Order-m reference element pair (P_m, P_{m-1}) on [0, 1].

Node functionals of the 0-form element (slot numbers are 1-based)::

    N_1(u) = u'(0)      N_2(u) = u'(1)
    N_{i+3}(u) = int l_i u'   (i = 0..m-3)      N_{m+1}(u) = u(0) + u(1)

and of the 1-form element::

    N_1(v) = v(0)       N_2(v) = v(1)      N_{i+3}(v) = int l_i v

with l_i the shifted Legendre polynomials. Both elements carry two bases:

* ``hierarchical0/1``: the cubic Hermite-type functions completed by the
  twice/once integrated Legendre polynomials K_{i-2}, L_{i-2};
* ``basis0/1``: the dual (nodal) basis, N_i(phi_j) = delta_ij.

For m = 3 the two coincide. For m >= 4 the hierarchical basis only gives a
triangular Gram matrix, so the nodal basis is obtained by inverting it. Since
d maps hierarchical0[i] to hierarchical1[i] and the Gram matrices share their
leading block, d also maps basis0[i] to basis1[i] and kills basis0[m].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache

import numpy as np

from .poly1d import (
    MAX_ORDER,
    FieldLike,
    Polynomial1D,
    ScalarField1D,
    as_field,
    combine,
    composite_rule,
    integrated_legendre,
    legendre,
)

__all__ = [
    "ElementPair",
    "ScalarField1D",
    "build_element",
    "derivative_matrix",
    "gram_matrix",
    "interpolate_0",
    "interpolate_1",
    "node_values_0",
    "node_values_1",
]

UNISOLVENCE_TOL = 1e-10

# cubic Hermite-type functions
_PHI0_CUBIC = (
    Polynomial1D([0.0, 1.0, -2.0, 1.0]),
    Polynomial1D([0.0, 0.0, -1.0, 1.0]),
    Polynomial1D([-0.5, 0.0, 3.0, -2.0]),
)
_PHI0_CONST = Polynomial1D([0.5])
_PHI1_QUADRATIC = (
    Polynomial1D([1.0, -4.0, 3.0]),
    Polynomial1D([0.0, -2.0, 3.0]),
    Polynomial1D([0.0, 6.0, -6.0]),
)


@dataclass(frozen=True)
class ElementPair:
    order: int
    basis0: tuple[Polynomial1D, ...]
    basis1: tuple[Polynomial1D, ...]
    hierarchical0: tuple[Polynomial1D, ...]
    hierarchical1: tuple[Polynomial1D, ...]

    @property
    def dim0(self) -> int:
        return self.order + 1

    @property
    def dim1(self) -> int:
        return self.order

    @property
    def original_index_set(self) -> tuple[int, ...]:
        """1-based slots of the cubic functionals inside the order-m element."""
        return (1, 2, 3, self.order + 1)

    def basis(self, which: int) -> tuple[Polynomial1D, ...]:
        if which == 0:
            return self.basis0
        if which == 1:
            return self.basis1
        raise ValueError("which must be 0 or 1")


def _poly_node_values_0(m: int, p: Polynomial1D) -> np.ndarray:
    dp = p.deriv()
    out = np.empty(m + 1)
    out[0] = dp(0.0)
    out[1] = dp(1.0)
    out[2] = p(1.0) - p(0.0)
    for i in range(1, m - 2):
        out[i + 2] = (legendre(i) * dp).integral(0.0, 1.0)
    out[m] = p(0.0) + p(1.0)
    return out


def _poly_node_values_1(m: int, p: Polynomial1D) -> np.ndarray:
    out = np.empty(m)
    out[0] = p(0.0)
    out[1] = p(1.0)
    for i in range(m - 2):
        out[i + 2] = (legendre(i) * p).integral(0.0, 1.0)
    return out


def _hierarchical(m: int) -> tuple[tuple[Polynomial1D, ...], tuple[Polynomial1D, ...]]:
    h0 = list(_PHI0_CUBIC) + [integrated_legendre(i - 2, 2) for i in range(4, m + 1)]
    h0.append(_PHI0_CONST)
    h1 = list(_PHI1_QUADRATIC) + [integrated_legendre(i - 2, 1) for i in range(4, m + 1)]
    return tuple(h0), tuple(h1)


@cache
def build_element(m: int) -> ElementPair:
    """Build the order-m pair; fails loudly unless the nodal Gram matrices are identities."""
    if m < 3:
        raise ValueError(f"order below cubic base construction: m = {m}, need m >= 3")
    if m > MAX_ORDER:
        raise ValueError(f"order overflow: {m} exceeds the maximum order {MAX_ORDER}")
    h0, h1 = _hierarchical(m)
    G0 = np.column_stack([_poly_node_values_0(m, p) for p in h0])
    G1 = np.column_stack([_poly_node_values_1(m, p) for p in h1])
    T0 = np.linalg.inv(G0)
    T1 = np.linalg.inv(G1)
    b0 = tuple(combine(T0[:, j], h0) for j in range(m + 1))
    b1 = tuple(combine(T1[:, j], h1) for j in range(m))
    e = ElementPair(order=m, basis0=b0, basis1=b1, hierarchical0=h0, hierarchical1=h1)
    for which in (0, 1):
        err = np.max(np.abs(gram_matrix(e, which) - np.eye(m + 1 - which)))
        if not err <= UNISOLVENCE_TOL:
            raise ArithmeticError(
                f"element of order {m} failed unisolvence check ({which}-forms): "
                f"max |N_i(phi_j) - delta_ij| = {err:.3e}"
            )
    return e


def _field_values(u: ScalarField1D, x):
    fx = np.asarray(u.value(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError("non-finite field values")
    return fx


def node_values_0(e: ElementPair, u: FieldLike) -> np.ndarray:
    """Values of the m+1 0-form node functionals; needs C1 data."""
    u = as_field(u)
    m = e.order
    if u.poly is not None:
        return _poly_node_values_0(m, u.poly)
    if u.derivative is None:
        raise ValueError("C1 data required: 0-form node functionals read u'")
    ends = _field_values(u, np.array([0.0, 1.0]))
    dends = np.asarray(u.derivative(np.array([0.0, 1.0])), dtype=float)
    out = np.empty(m + 1)
    out[0], out[1] = dends
    # slot 3 is int l_0 u' = u(1) - u(0); it uses the same rule as the 1-form
    # side so that N1(du) = N0(u) holds to round-off
    x, w = composite_rule(0.0, 1.0, m + 4)
    du = np.asarray(u.derivative(x), dtype=float)
    for i in range(m - 2):
        out[i + 2] = w @ (legendre(i)(x) * du)
    out[m] = ends[0] + ends[1]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite field values")
    return out


def node_values_1(e: ElementPair, v: FieldLike) -> np.ndarray:
    """Values of the m 1-form node functionals."""
    v = as_field(v)
    m = e.order
    if v.poly is not None:
        return _poly_node_values_1(m, v.poly)
    out = np.empty(m)
    out[:2] = _field_values(v, np.array([0.0, 1.0]))
    x, w = composite_rule(0.0, 1.0, m + 4)
    vx = _field_values(v, x)
    for i in range(m - 2):
        out[i + 2] = w @ (legendre(i)(x) * vx)
    return out


def interpolate_0(e: ElementPair, u: FieldLike) -> Polynomial1D:
    return combine(node_values_0(e, u), e.basis0)


def interpolate_1(e: ElementPair, v: FieldLike) -> Polynomial1D:
    return combine(node_values_1(e, v), e.basis1)


def node_values(e: ElementPair, which: int, u: FieldLike) -> np.ndarray:
    if which == 0:
        return node_values_0(e, u)
    if which == 1:
        return node_values_1(e, u)
    raise ValueError("which must be 0 or 1")


def gram_matrix(e: ElementPair, which: int) -> np.ndarray:
    """Matrix [N_i(phi_j)] of the nodal basis; the identity for a unisolvent element."""
    if which == 0:
        return np.column_stack([_poly_node_values_0(e.order, p) for p in e.basis0])
    if which == 1:
        return np.column_stack([_poly_node_values_1(e.order, p) for p in e.basis1])
    raise ValueError("which must be 0 or 1")


def derivative_matrix(e: ElementPair) -> np.ndarray:
    """Coefficients of d(phi0_j) in the 1-form basis, column j (m x (m+1))."""
    return np.column_stack([_poly_node_values_1(e.order, p.deriv()) for p in e.basis0])


def basis_gram(e: ElementPair, which: int, a: float = 0.0, b: float = 1.0) -> np.ndarray:
    """L2(a, b) inner products between basis functions."""
    basis = e.basis(which)
    return np.array([[p.inner(q, a, b) for q in basis] for p in basis])
