import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zeno_lab.exceptions import ValidationError
from zeno_lab.spectral import (
    SpectralOperator,
    SubspaceProjection,
    apply_function,
    hermitian_eig,
    operator_norm,
    random_unitary,
    sqrt_psd,
)


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A + A.conj().T


def test_eig_diagonal():
    op = hermitian_eig(np.diag([2.0, -1.0]))
    np.testing.assert_allclose(op.eigenvalues, [-1.0, 2.0])
    np.testing.assert_allclose(np.abs(op.eigenvectors), [[0, 1], [1, 0]], atol=1e-15)


def test_eig_swap():
    op = hermitian_eig([[0, 1], [1, 0]])
    np.testing.assert_allclose(op.eigenvalues, [-1.0, 1.0], atol=1e-15)


def test_eig_reconstruction_random():
    A = random_hermitian(8, 11)
    op = hermitian_eig(A)
    assert operator_norm(op.dense() - A) <= 1e-10 * max(1.0, operator_norm(A))
    assert np.all(np.diff(op.eigenvalues) >= 0)


@pytest.mark.parametrize("bad", [np.ones((2, 3)), [[0, 1], [0, 0]], [[np.nan, 0], [0, 1]]])
def test_eig_rejects(bad):
    with pytest.raises(ValidationError):
        hermitian_eig(bad)


def test_eig_symmetrizes_within_tolerance():
    A = np.diag([1.0, 2.0]).astype(complex)
    A[0, 1] = 1e-10
    op = hermitian_eig(A)
    assert np.allclose(op.dense(), op.dense().conj().T)


def test_apply_function_examples():
    op = hermitian_eig(np.diag([1.0, 2.0]))
    np.testing.assert_allclose(apply_function(op, lambda x: x), np.diag([1.0, 2.0]), atol=1e-15)
    zero = hermitian_eig([[0.0]])
    assert apply_function(zero, lambda x: np.exp(-1j * x))[0, 0] == 1
    one = hermitian_eig([[1.0]])
    assert apply_function(one, lambda x: 1 / (1 + 1j * x))[0, 0] == pytest.approx(0.5 - 0.5j, abs=1e-15)


def test_apply_function_scalar_callable_and_nonfinite():
    op = hermitian_eig(np.diag([1.0, 4.0]))
    np.testing.assert_allclose(apply_function(op, lambda x: float(x) ** 0.5), np.diag([1.0, 2.0]), atol=1e-14)
    with pytest.raises(ValidationError):
        with np.errstate(divide="ignore"):
            apply_function(hermitian_eig(np.diag([0.0, 1.0])), lambda x: 1 / x)


def test_real_function_gives_hermitian():
    op = hermitian_eig(random_hermitian(6, 2))
    R = apply_function(op, np.cos)
    assert np.max(np.abs(R - R.conj().T)) <= 1e-12


def test_operator_norm_examples():
    assert operator_norm(np.zeros((3, 3))) == 0
    assert operator_norm(np.diag([1.0, -3.0])) == pytest.approx(3.0, rel=1e-12)
    V = random_unitary(6, np.random.default_rng(0))[:, :2]
    assert operator_norm(V @ V.conj().T) == pytest.approx(1.0, rel=1e-10)


def test_sqrt_examples():
    np.testing.assert_allclose(sqrt_psd(hermitian_eig(np.diag([4.0, 9.0]), non_negative=True)), np.diag([2, 3]), atol=1e-14)
    np.testing.assert_allclose(sqrt_psd(hermitian_eig(np.zeros((2, 2)), non_negative=True)), 0, atol=0)
    op = SpectralOperator(np.array([-1e-12, 1.0]), np.eye(2), non_negative=True)
    np.testing.assert_allclose(sqrt_psd(op), np.diag([0.0, 1.0]), atol=0)


def test_negative_operator_rejected():
    with pytest.raises(ValidationError):
        SpectralOperator(np.array([-1e-3, 1.0]), np.eye(2), non_negative=True)
    with pytest.raises(ValidationError):
        sqrt_psd(SpectralOperator(np.array([-1e-3, 1.0]), np.eye(2)))


def test_subspace_projection_invariants():
    with pytest.raises(ValidationError):
        SubspaceProjection(np.ones((3, 1)))
    with pytest.raises(ValidationError):
        SubspaceProjection(np.zeros((3, 0)))
    P = SubspaceProjection(np.eye(4)[:, :2])
    assert (P.ambient_dim, P.rank) == (4, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2 ** 32 - 1))
def test_reconstruction_property(n, seed):
    A = random_hermitian(n, seed)
    op = hermitian_eig(A)
    assert operator_norm(op.dense() - A) <= 1e-10 * max(1.0, operator_norm(A))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_functional_calculus_composition(n, seed):
    op = hermitian_eig(random_hermitian(n, seed))
    g = np.tanh
    f = lambda x: np.exp(-1j * x)
    lhs = apply_function(op, lambda x: f(g(x)))
    # tanh is increasing, so g(lam) stays sorted and keeps the eigenbasis order
    inner = SpectralOperator(g(op.eigenvalues), op.eigenvectors)
    assert np.max(np.abs(lhs - apply_function(inner, f))) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2 ** 32 - 1))
def test_norm_submultiplicative(n, seed):
    rng = np.random.default_rng(seed)
    A, B = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(2))
    assert operator_norm(A @ B) <= operator_norm(A) * operator_norm(B) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_sqrt_squares_back(n, seed):
    A = random_hermitian(n, seed)
    op = hermitian_eig(A @ A, non_negative=True)
    R = sqrt_psd(op)
    assert operator_norm(R @ R - op.dense()) <= 1e-9 * max(1.0, op.eigenvalues[-1])
    assert np.min(np.linalg.eigvalsh(R)) >= -1e-9 * max(1.0, op.eigenvalues[-1])
