import math

import numpy as np
import pytest

from cochain_fec.fe1d import build_element, derivative_matrix
from cochain_fec.harness import random_rank_one, smooth_factor, substream, tensor_bound, tensor_commuting
from cochain_fec.poly1d import ScalarField1D, combine
from cochain_fec.quasi1d import quasi_coefficients, quasi_operator
from cochain_fec.tensorfec import (
    IndeterminateRankError,
    RankOneField,
    TensorPolyForm,
    _rank,
    blockwise_l2,
    char_vectors,
    cohomology_dims,
    d_matrix,
    dd_residual,
    l2_inner,
    l2_norm,
    rank_one_d,
    tensor_d,
    tensor_interpolate,
    theta_sign,
)


def test_char_vectors():
    assert char_vectors(2, 1) == [(0, 1), (1, 0)]
    assert char_vectors(3, 0) == [(0, 0, 0)]
    assert len(char_vectors(4, 2)) == 6
    for n in range(1, 5):
        for k in range(n + 1):
            assert len(char_vectors(n, k)) == math.comb(n, k)
    with pytest.raises(ValueError):
        char_vectors(5, 1)
    with pytest.raises(ValueError):
        char_vectors(2, 3)


def test_theta_sign():
    assert theta_sign((0, 0), 2) == 1
    assert theta_sign((1, 0), 2) == -1
    assert theta_sign((1, 1, 0), 3) == 1


def test_block_shape_validation():
    with pytest.raises(ValueError):
        TensorPolyForm(2, 1, 3, {(0, 1): np.zeros((4, 3)), (1, 0): np.zeros((4, 3))})
    with pytest.raises(ValueError):
        TensorPolyForm(2, 1, 3, {(0, 1): np.zeros((4, 3))})


def test_d_tens2_lines():
    rng = np.random.default_rng(0)
    m = 3
    D = np.hstack([np.eye(m), np.zeros((m, 1))])
    u0, v0 = rng.normal(size=m + 1), rng.normal(size=m + 1)
    u1, v1 = rng.normal(size=m), rng.normal(size=m)
    f = TensorPolyForm(2, 0, m, {(0, 0): np.outer(u0, v0)})
    df = tensor_d(f)
    np.testing.assert_array_equal(df.blocks[(1, 0)], np.outer(D @ u0, v0))
    np.testing.assert_array_equal(df.blocks[(0, 1)], np.outer(u0, D @ v0))
    g = TensorPolyForm(2, 1, m, {(0, 1): np.outer(u0, v1), (1, 0): np.zeros((m, m + 1))})
    np.testing.assert_array_equal(tensor_d(g).blocks[(1, 1)], np.outer(D @ u0, v1))
    # the (1,0) path carries theta = -1
    h = TensorPolyForm(2, 1, m, {(0, 1): np.zeros((m + 1, m)), (1, 0): np.outer(u1, v0)})
    np.testing.assert_array_equal(tensor_d(h).blocks[(1, 1)], -np.outer(u1, D @ v0))


@pytest.mark.parametrize("n", [2, 3])
def test_dd_zero_on_random_forms(n):
    rng = np.random.default_rng(n)
    f = TensorPolyForm.from_vector(n, 0, 3, rng.normal(size=4 ** n))
    dd = tensor_d(tensor_d(f))
    assert max(np.max(np.abs(b)) for b in dd.blocks.values()) <= 1e-12


def test_tensor_d_terminal_slot():
    with pytest.raises(ValueError):
        tensor_d(TensorPolyForm.zeros(2, 2, 3))


def test_d_matrix_examples():
    np.testing.assert_allclose(d_matrix(1, 0, 3), derivative_matrix(build_element(3)), atol=1e-12)
    assert d_matrix(2, 0, 3).shape[1] == 16
    rng = np.random.default_rng(1)
    f = TensorPolyForm.from_vector(3, 1, 4, rng.normal(size=d_matrix(3, 1, 4).shape[1]))
    np.testing.assert_allclose(d_matrix(3, 1, 4) @ f.to_vector(), tensor_d(f).to_vector(), atol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("m", [3, 4, 5])
def test_complex_and_cohomology(n, m):
    for k in range(n - 1):
        assert dd_residual(n, k, m) <= 1e-12
    assert cohomology_dims(n, m) == (1,) + (0,) * n


def test_unsigned_variant_breaks_complex():
    assert dd_residual(2, 0, 3, signed=False) > 1.0
    assert cohomology_dims(3, 3, signed=False) != (1, 0, 0, 0)


def test_indeterminate_rank():
    with pytest.raises(IndeterminateRankError, match="indeterminate rank"):
        _rank(np.diag([1.0, 1e-8]))


def test_l2_inner_examples():
    m = 3
    e = build_element(m)
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=m + 1), rng.normal(size=m + 1)
    A = TensorPolyForm(1, 0, m, {(0,): a})
    B = TensorPolyForm(1, 0, m, {(0,): b})
    assert l2_inner(A, B) == pytest.approx(combine(a, e.basis0).inner(combine(b, e.basis0)), abs=1e-12)
    u, up = rng.normal(size=m + 1), rng.normal(size=m + 1)
    v, vp = rng.normal(size=m), rng.normal(size=m)
    F = TensorPolyForm(2, 1, m, {(0, 1): np.outer(u, v), (1, 0): np.zeros((m, m + 1))})
    G = TensorPolyForm(2, 1, m, {(0, 1): np.outer(up, vp), (1, 0): np.zeros((m, m + 1))})
    expect = combine(u, e.basis0).inner(combine(up, e.basis0)) * combine(v, e.basis1).inner(combine(vp, e.basis1))
    assert l2_inner(F, G) == pytest.approx(expect, abs=1e-12)
    assert l2_inner(F, F) > 0 and l2_norm(TensorPolyForm.zeros(2, 1, m)) == 0.0


def test_interpolation_blocks():
    one = ScalarField1D(lambda x: np.ones_like(x))
    op = quasi_operator(3, 0.2)
    f = tensor_interpolate(2, 2, 3, [RankOneField((one, one), (1, 1))], mode="quasi", op=op)
    p1 = quasi_coefficients(op, 1, one)
    np.testing.assert_allclose(f.blocks[(1, 1)], np.outer(p1, p1))
    g = tensor_interpolate(2, 1, 3, [RankOneField((np.sin, one), (1, 0))], mode="quasi", op=op)
    assert np.any(g.blocks[(1, 0)]) and not np.any(g.blocks[(0, 1)])
    with pytest.raises(ValueError):
        tensor_interpolate(2, 1, 3, [RankOneField((one, one), (1, 1))])


def test_rank_one_d_signs():
    u = RankOneField((smooth_factor(np.random.default_rng(0)),) * 3, (1, 0, 0))
    du = rank_one_d(u)
    assert [(f.char, f.weight) for f in du] == [((1, 1, 0), -1.0), ((1, 0, 1), -1.0)]


@pytest.mark.parametrize("n", [2, 3])
def test_tensor_commuting(n):
    assert tensor_commuting(n, 3, substream(0, f"canon{n}"), "canonical", count=5) <= 1e-10
    op = quasi_operator(3, 0.2)
    assert tensor_commuting(n, 3, substream(0, f"quasi{n}"), "quasi", op=op, count=5) <= 1e-7


def test_tensor_bound():
    for k, value, bound in tensor_bound(2, quasi_operator(3, 0.2), substream(0, "tb"), count=20):
        assert value <= bound


def test_blockwise_l2_keys():
    f = tensor_interpolate(2, 1, 3, random_rank_one(np.random.default_rng(0), 2, 1, 3))
    assert set(blockwise_l2(f)) == {(0, 1), (1, 0)}
