"""Dense Hermitian spectral calculus.

Every operator that needs a function applied to it is kept as an
eigendecomposition ``A = U diag(lam) U*`` so that ``f(A)`` is exact up to the
error of the eigensolver.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._validation import check_matrix
from .exceptions import NumericalGuardError, ValidationError

HERMITIAN_TOL = 1e-8
UNITARY_TOL = 1e-10
CLAMP_TOL = 1e-10


def clamp_floor(eigenvalues):
    """Most negative eigenvalue still accepted as zero for a PSD operator."""
    top = float(np.max(eigenvalues)) if len(eigenvalues) else 0.0
    return -CLAMP_TOL * max(1.0, top)


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    """Hermitian operator stored as ascending real eigenvalues and a unitary basis.

    Set ``non_negative`` when the operator is known to be PSD; eigenvalues in
    the clamping window ``[-1e-10 * max(1, lam_max), 0)`` are then accepted.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    non_negative: bool = False
    _dense: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        U = check_matrix(self.eigenvectors, "eigenvectors", square=True)
        if lam.ndim != 1 or lam.shape[0] != U.shape[0]:
            raise ValidationError("eigenvalue count must match the eigenvector matrix")
        if not np.all(np.isfinite(lam)):
            raise ValidationError("eigenvalues must be finite")
        if np.any(np.diff(lam) < 0):
            raise ValidationError("eigenvalues must be sorted ascending")
        if np.linalg.norm(U.conj().T @ U - np.eye(len(lam)), 2) > UNITARY_TOL:
            raise ValidationError("eigenvector matrix is not unitary within 1e-10")
        if self.non_negative and len(lam) and lam[0] < clamp_floor(lam):
            raise ValidationError(
                f"operator flagged non-negative has eigenvalue {lam[0]:.3e}"
            )
        lam.setflags(write=False)
        U.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", U)

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    @property
    def scale(self):
        return max(1.0, float(np.max(np.abs(self.eigenvalues)))) if self.dim else 1.0

    def dense(self):
        """The operator as a dense matrix ``U diag(lam) U*`` (cached)."""
        if self._dense is None:
            U = self.eigenvectors
            A = (U * self.eigenvalues) @ U.conj().T
            A = 0.5 * (A + A.conj().T)
            A.setflags(write=False)
            object.__setattr__(self, "_dense", A)
        return self._dense

    def clamped_eigenvalues(self):
        """Eigenvalues with the tolerated negative round-off set to zero."""
        if not self.non_negative:
            raise ValidationError("clamping is only defined for non-negative operators")
        return np.maximum(self.eigenvalues, 0.0)


@dataclass(frozen=True, eq=False)
class SubspaceProjection:
    """Orthogonal projection ``P = V V*`` given by an isometry ``V``."""

    isometry: np.ndarray

    def __post_init__(self):
        V = check_matrix(self.isometry, "isometry")
        n, r = V.shape
        if not 1 <= r <= n:
            raise ValidationError(f"isometry rank must lie in [1, {n}], got {r}")
        if np.linalg.norm(V.conj().T @ V - np.eye(r), 2) > UNITARY_TOL:
            raise ValidationError("isometry columns are not orthonormal within 1e-10")
        V.setflags(write=False)
        object.__setattr__(self, "isometry", V)

    @property
    def ambient_dim(self):
        return self.isometry.shape[0]

    @property
    def rank(self):
        return self.isometry.shape[1]

    def projector(self):
        V = self.isometry
        return V @ V.conj().T

    def compress(self, A):
        """``V* A V`` as a rank x rank matrix."""
        V = self.isometry
        return V.conj().T @ A @ V


def hermitian_eig(A, tol=HERMITIAN_TOL, non_negative=False):
    """Eigendecompose a Hermitian matrix.

    ``A`` must satisfy ``||A - A*|| <= tol * ||A||``; it is symmetrized before
    the decomposition.

    Raises
    ------
    ValidationError
        Non-square input or Hermiticity violated beyond ``tol``.
    NumericalGuardError
        The LAPACK eigensolver did not converge.
    """
    A = check_matrix(A, "A", square=True)
    norm = operator_norm(A)
    if operator_norm(A - A.conj().T) > tol * norm:
        raise ValidationError("matrix is not Hermitian within tolerance")
    A = 0.5 * (A + A.conj().T)
    try:
        lam, U = scipy.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalGuardError(f"eigensolver failed: {exc}") from exc
    return SpectralOperator(lam, U, non_negative=non_negative)


def _evaluate(f, x):
    try:
        values = np.asarray(f(x), dtype=np.complex128)
    except TypeError:
        values = None
    if values is None or values.shape != x.shape:
        values = np.array([complex(f(float(v))) for v in x], dtype=np.complex128)
    return values


def apply_function(op, f):
    """Spectral calculus: ``U diag(f(lam)) U*``.

    ``f`` is called once on the eigenvalue array; scalar-only callables are
    detected and evaluated elementwise. A real-valued ``f`` yields an exactly
    Hermitian result.
    """
    values = _evaluate(f, op.eigenvalues)
    if not np.all(np.isfinite(values)):
        raise ValidationError("function is not finite at every eigenvalue")
    U = op.eigenvectors
    out = (U * values) @ U.conj().T
    if not np.any(values.imag):
        out = 0.5 * (out + out.conj().T)
    return out


def operator_norm(A):
    """Largest singular value."""
    A = check_matrix(A, "A")
    if A.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(A)[0])


def sqrt_psd(op):
    """Square root of a non-negative operator, clamping round-off negatives."""
    if not op.non_negative:
        if len(op.eigenvalues) and op.eigenvalues[0] < clamp_floor(op.eigenvalues):
            raise ValidationError("square root requested for an operator with negative spectrum")
    roots = np.sqrt(np.maximum(op.eigenvalues, 0.0))
    return apply_function(op, lambda _x: roots)


def power_psd(op, exponent):
    """``op ** exponent`` for a non-negative operator (clamped spectrum)."""
    if len(op.eigenvalues) and op.eigenvalues[0] < clamp_floor(op.eigenvalues):
        raise ValidationError("fractional power requested for an operator with negative spectrum")
    values = np.maximum(op.eigenvalues, 0.0) ** exponent
    return apply_function(op, lambda _x: values)


def random_unitary(dim, rng):
    """Haar-distributed unitary: QR of a complex Gaussian with the phase of R's diagonal fixed."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))
