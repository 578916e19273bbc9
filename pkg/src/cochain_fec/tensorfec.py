"""Tensor-product finite element complex on the reference hypercube.

A k-form is stored blockwise: one coefficient tensor per characteristic vector
``bits`` (a 0/1 tuple with k ones), with axis j of length m+1 when fiber j
carries a 0-form and m when it carries a 1-form. Fiber coefficients refer to
the nodal bases of :func:`cochain_fec.fe1d.build_element`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cache
from typing import Optional, Sequence, Union

import numpy as np

from .fe1d import basis_gram, build_element, derivative_matrix, node_values
from .poly1d import ScalarField1D, as_field
from .quasi1d import QuasiOperator, quasi_coefficients, quasi_operator

MAX_DIM = 4
RANK_RTOL = 1e-8

CharVector = tuple[int, ...]


class IndeterminateRankError(ArithmeticError):
    pass


def char_vectors(n: int, k: int) -> list[CharVector]:
    """All 0/1 vectors of length n with k ones, in lexicographic order."""
    if not (1 <= n <= MAX_DIM) or not (0 <= k <= n):
        raise ValueError(f"need 0 <= k <= n <= {MAX_DIM}, got n = {n}, k = {k}")
    return [c for c in itertools.product((0, 1), repeat=n) if sum(c) == k]


def theta_sign(char: Sequence[int], j: int) -> int:
    """(-1)^(i_1 + ... + i_{j-1}) for the 1-based fiber index j."""
    return -1 if sum(char[: j - 1]) % 2 else 1


def block_shape(char: Sequence[int], m: int) -> tuple[int, ...]:
    return tuple(m if b else m + 1 for b in char)


@dataclass(frozen=True, eq=False)
class TensorPolyForm:
    n: int
    k: int
    m: int
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        chars = char_vectors(self.n, self.k)
        if set(self.blocks) != set(chars):
            raise ValueError("blocks must be keyed exactly by the characteristic vectors")
        for c in chars:
            if self.blocks[c].shape != block_shape(c, self.m):
                raise ValueError(f"block {c} has shape {self.blocks[c].shape}, "
                                 f"expected {block_shape(c, self.m)}")

    @classmethod
    def zeros(cls, n: int, k: int, m: int) -> TensorPolyForm:
        return cls(n, k, m, {c: np.zeros(block_shape(c, m)) for c in char_vectors(n, k)})

    @classmethod
    def from_vector(cls, n: int, k: int, m: int, vec) -> TensorPolyForm:
        vec = np.asarray(vec, dtype=float)
        blocks, pos = {}, 0
        for c in char_vectors(n, k):
            shape = block_shape(c, m)
            size = math.prod(shape)
            blocks[c] = vec[pos:pos + size].reshape(shape)
            pos += size
        if pos != vec.size:
            raise ValueError("vector length does not match the form space")
        return cls(n, k, m, blocks)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.blocks[c].ravel() for c in char_vectors(self.n, self.k)])

    def __sub__(self, other: TensorPolyForm) -> TensorPolyForm:
        _check_compatible(self, other)
        return TensorPolyForm(self.n, self.k, self.m,
                              {c: self.blocks[c] - other.blocks[c] for c in self.blocks})

    def __add__(self, other: TensorPolyForm) -> TensorPolyForm:
        _check_compatible(self, other)
        return TensorPolyForm(self.n, self.k, self.m,
                              {c: self.blocks[c] + other.blocks[c] for c in self.blocks})


def _check_compatible(a: TensorPolyForm, b: TensorPolyForm) -> None:
    if (a.n, a.k, a.m) != (b.n, b.k, b.m):
        raise ValueError(f"form shape mismatch: {(a.n, a.k, a.m)} vs {(b.n, b.k, b.m)}")


def form_dim(n: int, k: int, m: int) -> int:
    return sum(math.prod(block_shape(c, m)) for c in char_vectors(n, k))


FIBER_D_TOL = 1e-10


@cache
def _fiber_d(m: int) -> np.ndarray:
    """Fiber derivative matrix, snapped to the exact [I | 0] after checking the computed one."""
    exact = np.hstack([np.eye(m), np.zeros((m, 1))])
    err = np.max(np.abs(derivative_matrix(build_element(m)) - exact))
    if not err <= FIBER_D_TOL:
        raise ArithmeticError(f"fiber derivative matrix deviates from [I | 0] by {err:.3e}")
    exact.setflags(write=False)
    return exact


def _apply_along(A: np.ndarray, X: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(A, X, axes=([1], [axis])), 0, axis)


def tensor_d(form: TensorPolyForm, signed: bool = True) -> TensorPolyForm:
    """Exterior derivative: fiber derivative along each 0-form fiber, signed by theta.

    ``signed=False`` drops the theta signs; it exists only to show that the
    unsigned variant breaks d o d = 0.
    """
    n, k, m = form.n, form.k, form.m
    if k == n:
        raise ValueError("no (n+1)-forms: d of an n-form is the zero map")
    D = _fiber_d(m)
    out = TensorPolyForm.zeros(n, k + 1, m)
    for c, X in form.blocks.items():
        for j in range(n):
            if c[j]:
                continue
            target = c[:j] + (1,) + c[j + 1:]
            s = theta_sign(c, j + 1) if signed else 1
            out.blocks[target] += s * _apply_along(D, X, j)
    return out


@cache
def _d_matrix_cached(n: int, k: int, m: int, signed: bool) -> np.ndarray:
    src = char_vectors(n, k)
    dst = char_vectors(n, k + 1)
    D = _fiber_d(m)
    offs_src = np.cumsum([0] + [math.prod(block_shape(c, m)) for c in src])
    offs_dst = np.cumsum([0] + [math.prod(block_shape(c, m)) for c in dst])
    out = np.zeros((offs_dst[-1], offs_src[-1]))
    for a, c in enumerate(src):
        for j in range(n):
            if c[j]:
                continue
            target = c[:j] + (1,) + c[j + 1:]
            b = dst.index(target)
            factors = [D if i == j else np.eye(block_shape(c, m)[i]) for i in range(n)]
            K = factors[0]
            for F in factors[1:]:
                K = np.kron(K, F)
            s = theta_sign(c, j + 1) if signed else 1
            out[offs_dst[b]:offs_dst[b + 1], offs_src[a]:offs_src[a + 1]] += s * K
    out.setflags(write=False)
    return out


def d_matrix(n: int, k: int, m: int, signed: bool = True) -> np.ndarray:
    """Matrix of tensor_d on flattened coefficients (C order per block, blocks lexicographic)."""
    if not 0 <= k < n:
        raise ValueError("d_matrix needs 0 <= k < n")
    char_vectors(n, k)
    build_element(m)
    return _d_matrix_cached(n, k, m, signed)


def _rank(A: np.ndarray) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    thr = RANK_RTOL * s[0]
    if np.any((s > thr / 10.0) & (s < thr * 10.0)):
        raise IndeterminateRankError("indeterminate rank: singular values within 10x of threshold")
    return int(np.sum(s > thr))


def cohomology_dims(n: int, m: int, signed: bool = True) -> tuple[int, ...]:
    """dim ker d_k - rank d_{k-1}, k = 0..n."""
    if n > 3:
        raise ValueError("cohomology computation is capped at n <= 3")
    ranks = [_rank(d_matrix(n, k, m, signed)) for k in range(n)]
    dims = []
    for k in range(n + 1):
        ker = form_dim(n, k, m) - (ranks[k] if k < n else 0)
        im = ranks[k - 1] if k > 0 else 0
        dims.append(ker - im)
    return tuple(dims)


def dd_residual(n: int, k: int, m: int, signed: bool = True) -> float:
    """max |d_{k+1} d_k| entrywise."""
    return float(np.max(np.abs(d_matrix(n, k + 1, m, signed) @ d_matrix(n, k, m, signed))))


@dataclass(frozen=True)
class RankOneField:
    """u_1 (x) ... (x) u_n scaled by ``weight``; factor j is an char[j]-form."""

    factors: tuple
    char: CharVector
    weight: float = 1.0

    def __post_init__(self):
        if len(self.factors) != len(self.char):
            raise ValueError("one factor per fiber required")
        object.__setattr__(self, "factors",
                           tuple(as_field(f).with_form(b) for f, b in zip(self.factors, self.char)))
        object.__setattr__(self, "char", tuple(int(b) for b in self.char))

    @property
    def k(self) -> int:
        return sum(self.char)


def rank_one_d(u: RankOneField) -> list[RankOneField]:
    """d of a rank-one field as a list of signed rank-one fields."""
    out = []
    for j, b in enumerate(u.char):
        if b:
            continue
        factors = list(u.factors)
        factors[j] = factors[j].d()
        char = u.char[:j] + (1,) + u.char[j + 1:]
        out.append(RankOneField(tuple(factors), char, u.weight * theta_sign(u.char, j + 1)))
    return out


def _outer(vectors) -> np.ndarray:
    T = np.asarray(vectors[0], dtype=float)
    for v in vectors[1:]:
        T = np.multiply.outer(T, v)
    return T


def tensor_interpolate(n: int, k: int, m: int, fields: Sequence[RankOneField],
                       mode: str = "canonical", rho: Optional[float] = None,
                       op: Optional[QuasiOperator] = None) -> TensorPolyForm:
    """Canonical (I) or quasi (Pi) tensor interpolation of a sum of rank-one fields."""
    if mode == "canonical":
        e = build_element(m)

        def fiber(which, f):
            return node_values(e, which, f)
    elif mode == "quasi":
        if op is None:
            op = quasi_operator(m, rho if rho is not None else 0.2)
        if op.order != m:
            raise ValueError("quasi operator order does not match m")

        def fiber(which, f):
            return quasi_coefficients(op, which, f)
    else:
        raise ValueError("mode must be 'canonical' or 'quasi'")
    out = TensorPolyForm.zeros(n, k, m)
    for u in fields:
        if len(u.char) != n or u.k != k:
            raise ValueError(f"field characteristic vector {u.char} is not in chi_{k} for n = {n}")
        vecs = [fiber(b, f) for b, f in zip(u.char, u.factors)]
        out.blocks[u.char] += u.weight * _outer(vecs)
    return out


@cache
def _fiber_grams(m: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    e = build_element(m)
    return basis_gram(e, 0, a, b), basis_gram(e, 1, a, b)


def l2_inner(A: TensorPolyForm, B: TensorPolyForm, interval: tuple[float, float] = (0.0, 1.0)) -> float:
    """L2 inner product over interval^n, factorized fiberwise."""
    _check_compatible(A, B)
    G = _fiber_grams(A.m, float(interval[0]), float(interval[1]))
    total = 0.0
    for c, X in A.blocks.items():
        Y = B.blocks[c]
        for j, bit in enumerate(c):
            Y = _apply_along(G[bit], Y, j)
        total += float(np.sum(X * Y))
    return total


def l2_norm(A: TensorPolyForm, interval: tuple[float, float] = (0.0, 1.0)) -> float:
    return math.sqrt(max(l2_inner(A, A, interval), 0.0))


def blockwise_l2(A: TensorPolyForm, interval: tuple[float, float] = (0.0, 1.0)) -> dict:
    """L2 norm of each block separately."""
    out = {}
    for c in A.blocks:
        single = TensorPolyForm.zeros(A.n, A.k, A.m)
        single.blocks[c][...] = A.blocks[c]
        out[c] = l2_norm(single, interval)
    return out
