"""Interlaced Zeno products, their limit, error metrics and certified bounds.

Notation used throughout: ``H`` is the ambient Hermitian operator (spectral
form), ``V`` an isometry onto the subspace ``h`` with ``P = V V*``, ``phi`` an
admissible function, and

* ``F(tau) = V* phi(tau H) V``          (one step)
* ``S(tau) = (I - F(tau)) / tau``       (defect)
* ``K = (sqrt(H) V)* (sqrt(H) V)``      (Zeno generator)

so that ``F(t/n)^n -> exp(-itK)``.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from . import functions as fn
from ._validation import check_count, check_positive, check_vectors
from .exceptions import NumericalGuardError, ValidationError
from .spectral import (
    SpectralOperator,
    SubspaceProjection,
    apply_function,
    hermitian_eig,
    operator_norm,
    power_psd,
    sqrt_psd,
)

COMMUTING_TOL = 1e-10
CONDITION_LIMIT = 1e12
FACTORIZATION_TOL = 1e-9
SANDWICH_TOL = 1e-9
BOUND_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class ZenoModel:
    """A pair ``(H, V)`` with structural flags.

    ``meta`` carries builder-specific data (for the momentum model: grid step,
    window and chart end) and is never used by the generic engine.
    """

    H: SpectralOperator
    V: SubspaceProjection
    name: str = "model"
    non_negative: bool = True
    commuting: bool = False
    out_of_assumption: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.H.dim != self.V.ambient_dim:
            raise ValidationError(
                f"H has dimension {self.H.dim} but V lives in dimension {self.V.ambient_dim}"
            )
        if self.out_of_assumption and self.non_negative:
            raise ValidationError("an out-of-assumption model cannot be flagged non-negative")
        if self.non_negative and not self.H.non_negative:
            raise ValidationError("model flagged non-negative but H is not")
        if self.commuting and self.commutator_norm() > COMMUTING_TOL:
            raise ValidationError("model flagged commuting but ||PH - HP|| > 1e-10")

    @property
    def rank(self):
        return self.V.rank

    @property
    def dim(self):
        return self.H.dim

    def commutator_norm(self):
        P = self.V.projector()
        Hd = self.H.dense()
        return operator_norm(P @ Hd - Hd @ P)

    @cached_property
    def root_compression(self):
        """``sqrt(H) V`` (the operator T restricted to h)."""
        return sqrt_psd(self.H) @ self.V.isometry

    @cached_property
    def _basis_overlap(self):
        # U* V: coordinates of the subspace basis in the eigenbasis of H
        return self.H.eigenvectors.conj().T @ self.V.isometry

    def compress_function(self, values):
        """``V* f(H) V`` from the values of ``f`` on the spectrum of ``H``."""
        W = self._basis_overlap
        out = W.conj().T @ (np.asarray(values)[:, None] * W)
        if not np.any(np.imag(values)):
            out = 0.5 * (out + out.conj().T)
        return out


def _require_non_negative(model, what):
    if not model.non_negative:
        raise ValidationError(f"{what} requires a non-negative model; {model.name!r} is not")


def _spectrum(model):
    return model.H.clamped_eigenvalues() if model.non_negative else model.H.eigenvalues


def standard_test_vectors(rank, seed=0, n_random=8):
    """Columns: the standard basis of ``h`` followed by seeded random unit vectors."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((rank, n_random)) + 1j * rng.standard_normal((rank, n_random))
    Z /= np.linalg.norm(Z, axis=0)
    return np.hstack([np.eye(rank, dtype=np.complex128), Z])


# -- generator, steps and products -----------------------------------------

def zeno_generator(model):
    """``K = (sqrt(H) V)* (sqrt(H) V) = V* H V`` on ``h``."""
    _require_non_negative(model, "the Zeno generator")
    T = model.root_compression
    K = T.conj().T @ T
    return 0.5 * (K + K.conj().T)


def _phi_on_spectrum(model, spec, tau):
    lam = _spectrum(model)
    try:
        values = spec(tau * lam)
    except Exception as exc:
        raise ValidationError(f"evaluator {spec.id!r} failed on the spectrum: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"evaluator {spec.id!r} is not finite on the spectrum of tau*H")
    return values


def zeno_step(model, spec, tau):
    """One interlaced step ``F(tau) = V* phi(tau H) V``."""
    tau = check_positive(tau, "tau")
    return model.compress_function(_phi_on_spectrum(model, spec, tau))


def defect_operator(model, spec, tau):
    """``S(tau) = (I - F(tau)) / tau``.

    ``I - F(tau)`` is formed from ``1 - phi`` on the spectrum so that small
    ``tau`` does not lose digits. For non-negative models the factorization
    ``I - F = tau * T* p(tau H) T`` is verified to 1e-9.
    """
    tau = check_positive(tau, "tau")
    lam = _spectrum(model)
    one_minus = spec.one_minus(tau * lam)
    S = model.compress_function(one_minus) / tau
    if model.non_negative:
        residual = factorization_residual(model, spec, tau, S * tau)
        if residual > FACTORIZATION_TOL:
            raise NumericalGuardError(
                f"factorization I - F = tau T* p T violated by {residual:.3e} at tau={tau}"
            )
    return S


def factorization_residual(model, spec, tau, one_minus_F=None):
    """``||(I - F(tau)) - tau (sqrt(H) V)* p(tau H) (sqrt(H) V)||``."""
    _require_non_negative(model, "the factorization check")
    lam = _spectrum(model)
    if one_minus_F is None:
        one_minus_F = np.eye(model.rank) - zeno_step(model, spec, tau)
    p_vals = fn.p_function(spec, tau * lam)
    W = model._basis_overlap
    root = np.sqrt(lam)
    T_eig = root[:, None] * W
    rhs = tau * (T_eig.conj().T @ (p_vals[:, None] * T_eig))
    return operator_norm(one_minus_F - rhs)


def zeno_product(model, spec, t, n):
    """``F(t/n)^n`` by binary exponentiation; ``t = 0`` gives the identity.

    Models flagged ``commuting`` take the power on the spectrum of ``H``.
    """
    t = check_positive(t, "t", strict=False)
    n = check_count(n, "n")
    if t == 0:
        return np.eye(model.rank, dtype=np.complex128)
    if model.commuting:
        # P commutes with H, so the product is V* phi(tH/n)^n V; powering the
        # eigenvalues avoids n-fold accumulation of the round-off in F
        values = _phi_on_spectrum(model, spec, t / n)
        return model.compress_function(values ** n)
    F = zeno_step(model, spec, t / n)
    return np.linalg.matrix_power(F, n)


def zeno_target(model, t, K=None):
    """``exp(-itK)`` via the eigendecomposition of ``K``."""
    _require_non_negative(model, "the Zeno target")
    if K is None:
        K = zeno_generator(model)
    Kop = hermitian_eig(K, non_negative=True)
    return apply_function(Kop, lambda x: np.exp(-1j * t * x))


# -- error metrics ----------------------------------------------------------

@dataclass
class ConvergenceRecord:
    """One sweep cell ``(model, function, t, n)``; absent metrics stay ``None``."""

    model_id: str
    function_id: str
    t: float
    n: int
    norm_error: Optional[float] = None
    strong_errors: Optional[list] = None
    avg_error: Optional[float] = None
    bound_lhs: Optional[float] = None
    bound_rhs: Optional[float] = None
    bound_pass: Optional[bool] = None
    diagnostics: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def strong_error_max(self):
        return max(self.strong_errors) if self.strong_errors else None

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "function_id": self.function_id,
            "t": self.t,
            "n": self.n,
            "norm_error": self.norm_error,
            "strong_errors": self.strong_errors,
            "avg_error": self.avg_error,
            "bound_lhs": self.bound_lhs,
            "bound_rhs": self.bound_rhs,
            "pass": self.bound_pass,
            "diagnostics": dict(self.diagnostics),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            model_id=d["model_id"],
            function_id=d["function_id"],
            t=d["t"],
            n=d["n"],
            norm_error=d.get("norm_error"),
            strong_errors=d.get("strong_errors"),
            avg_error=d.get("avg_error"),
            bound_lhs=d.get("bound_lhs"),
            bound_rhs=d.get("bound_rhs"),
            bound_pass=d.get("pass"),
            diagnostics=dict(d.get("diagnostics") or {}),
            notes=list(d.get("notes") or []),
        )


def error_metrics(product, target, test_vectors):
    """Operator-norm error and per-vector errors of ``product - target``.

    Returns a dict with ``norm_error`` and ``strong_errors`` (one entry per
    column of ``test_vectors``; columns must be unit vectors).
    """
    product = np.asarray(product)
    target = np.asarray(target)
    if product.shape != target.shape:
        raise ValidationError(f"shape mismatch {product.shape} vs {target.shape}")
    X = check_vectors(test_vectors, product.shape[1], "test_vectors")
    if not np.allclose(np.linalg.norm(X, axis=0), 1.0, atol=1e-12):
        raise ValidationError("test vectors must be unit-normalized")
    D = product - target
    return {
        "norm_error": operator_norm(D),
        "strong_errors": np.linalg.norm(D @ X, axis=0).tolist(),
    }


def time_averaged_error(model, spec, n, T_max, nodes=33, test_vectors=None, K=None):
    """Mean over test vectors of ``int_0^T ||(F(t/n)^n - exp(-itK)) f||^2 dt``.

    Composite trapezoid rule on ``nodes`` equally spaced points (odd, >= 33).
    """
    nodes = check_count(nodes, "nodes", minimum=33)
    if nodes % 2 == 0:
        raise ValidationError("quadrature node count must be odd")
    T_max = check_positive(T_max, "T_max", strict=False)
    if T_max == 0:
        return 0.0
    if K is None:
        K = zeno_generator(model)
    if test_vectors is None:
        test_vectors = standard_test_vectors(model.rank)
    X = check_vectors(test_vectors, model.rank, "test_vectors")
    Kop = hermitian_eig(K, non_negative=True)
    ts = np.linspace(0.0, T_max, nodes)
    integrand = np.empty(nodes)
    for i, t in enumerate(ts):
        D = zeno_product(model, spec, t, n) - apply_function(Kop, lambda x: np.exp(-1j * t * x))
        integrand[i] = np.mean(np.linalg.norm(D @ X, axis=0) ** 2)
    return float(max(trapezoid(integrand, ts), 0.0))


# -- certified operator-norm bound ----------------------------------------

@dataclass(frozen=True)
class BoundCertificate:
    lhs: float
    rhs: float
    chernoff_term: float
    semigroup_term: float
    c_p: float
    c_alpha: float

    @property
    def passed(self):
        return self.lhs <= self.rhs * (1.0 + BOUND_SLACK)

    def to_dict(self):
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "chernoff_term": self.chernoff_term,
            "semigroup_term": self.semigroup_term,
            "c_p": self.c_p,
            "c_alpha": self.c_alpha,
            "pass": self.passed,
        }


def alpha_generator(model, alpha):
    """``K_alpha = V* H^(1+alpha) V`` with the clamped spectrum."""
    _require_non_negative(model, "K_alpha")
    return model.V.compress(power_psd(model.H, 1.0 + alpha))


def certify_bound(model, spec, t, n, alpha=1.0, c_p=None, c_alpha=None):
    """Compare ``||F(t/n)^n - exp(-itK)||`` with its two-term a-priori bound.

    The bound is ``C_p t ||K|| / sqrt(n)`` (Chernoff's square-root estimate for
    the contraction ``F``) plus ``t (t/n)^alpha C_alpha ||K_alpha||`` (distance
    of ``exp(-t S(t/n))`` from the target). ``C_p`` and ``C_alpha`` default to
    their grid suprema.
    """
    _require_non_negative(model, "bound certification")
    t = check_positive(t, "t", strict=False)
    n = check_count(n, "n")
    alpha = check_positive(alpha, "alpha")
    if c_p is None:
        c_p = fn.p_constant(spec)
    if c_alpha is None:
        c_alpha = fn.alpha_constant(spec, alpha)
    K = zeno_generator(model)
    lhs = operator_norm(zeno_product(model, spec, t, n) - zeno_target(model, t, K))
    chernoff = c_p * t * operator_norm(K) / np.sqrt(n)
    semigroup = t * (t / n) ** alpha * c_alpha * operator_norm(alpha_generator(model, alpha))
    return BoundCertificate(lhs, chernoff + semigroup, chernoff, semigroup, c_p, c_alpha)


# -- proof-path diagnostics -------------------------------------------------

DIAGNOSTIC_NAMES = ("kato_resolvent", "full_resolvent", "m_resolvent", "defect_resolvent")


def _guarded_inverse(A, label):
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise NumericalGuardError(f"{label} is ill-conditioned (cond {cond:.3e})")
    return np.linalg.inv(A)


def proof_path_diagnostics(model, spec, tau_list, decomposition=None):
    """Residuals of the four resolvent limits on the strong-convergence proof path.

    For each ``tau`` with ``L0 = V* (1 - kato)(tau H) V / tau``,
    ``R = V* (1 - psi)(tau H) V / tau``, ``L = R + L0`` and
    ``M = (I + L0)^{-1/2} R (I + L0)^{-1/2}``:

    ``kato_resolvent``   ``||(I + L0)^-1 - (I + K)^-1||``
    ``full_resolvent``   ``||(I + L)^-1 - (I + K)^-1||``
    ``m_resolvent``      ``||(I + M)^-1 - I||``
    ``defect_resolvent`` ``||(I + S)^-1 - (I + iK)^-1||``

    Returns a dict mapping each name to an array aligned with ``tau_list``.
    """
    _require_non_negative(model, "proof-path diagnostics")
    if decomposition is None:
        decomposition = fn.kato_part_decompose(spec)
    K = zeno_generator(model)
    I = np.eye(model.rank)
    base = np.linalg.inv(I + K)
    base_defect = np.linalg.inv(I + 1j * K)
    lam = _spectrum(model)
    out = {name: [] for name in DIAGNOSTIC_NAMES}
    for tau in tau_list:
        tau = check_positive(tau, "tau")
        x = tau * lam
        omega = decomposition.omega(x)
        # 1 - psi = Re(1 - phi), kept cancellation-free via the complement
        one_minus_psi = spec.one_minus(x).real
        L0 = model.compress_function(omega) / tau
        R = model.compress_function(one_minus_psi) / tau
        A0 = hermitian_eig(I + L0, non_negative=True)
        if A0.eigenvalues[-1] / A0.eigenvalues[0] > CONDITION_LIMIT:
            raise NumericalGuardError(f"I + L0 is ill-conditioned at tau={tau}")
        inv_sqrt = apply_function(A0, lambda v: v ** -0.5)
        M = inv_sqrt @ R @ inv_sqrt
        S = defect_operator(model, spec, tau)
        out["kato_resolvent"].append(operator_norm(_guarded_inverse(I + L0, "I + L0") - base))
        out["full_resolvent"].append(operator_norm(_guarded_inverse(I + R + L0, "I + L") - base))
        out["m_resolvent"].append(operator_norm(_guarded_inverse(I + M, "I + M") - I))
        out["defect_resolvent"].append(operator_norm(_guarded_inverse(I + S, "I + S") - base_defect))
    return {name: np.asarray(vals) for name, vals in out.items()}


@dataclass(frozen=True)
class SandwichResult:
    lower_margins: np.ndarray
    upper_margins: np.ndarray
    central: np.ndarray = field(repr=False)
    lower_form: np.ndarray = field(repr=False)
    upper_form: np.ndarray = field(repr=False)

    @property
    def passed(self):
        return bool(
            np.all(self.lower_margins >= -SANDWICH_TOL) and np.all(self.upper_margins >= -SANDWICH_TOL)
        )


def sandwich_check(model, decomposition, tau, vectors, grid=None):
    """Check ``k-_tau(f,f) <= (central f, f) <= k+_tau(f,f)`` for each column ``f``.

    ``central = V* (1 - kato)(tau H) V / tau`` and
    ``k+-_tau(f, f) = (p+-(tau H) sqrt(H) V f, sqrt(H) V f)``. At ``tau = 0``
    both bounds and the central form reduce to ``(K f, f)``.
    """
    _require_non_negative(model, "the sandwich check")
    tau = check_positive(tau, "tau", strict=False)
    X = check_vectors(vectors, model.rank, "vectors")
    lam = _spectrum(model)
    # coefficients of each vector in the eigenbasis of H, weighted by sqrt(lam)
    G = np.sqrt(lam)[:, None] * (model._basis_overlap @ X)
    weights = np.abs(G) ** 2
    if tau == 0:
        p_lo = p_hi = np.ones_like(lam)
        central = np.sum(weights, axis=0)
    else:
        p_lo, p_hi = fn.PBounds(decomposition, grid)(tau * lam)
        C = model.compress_function(decomposition.omega(tau * lam)) / tau
        central = np.real(np.einsum("ij,ij->j", X.conj(), C @ X))
    lower = p_lo @ weights
    upper = p_hi @ weights
    return SandwichResult(central - lower, upper - central, central, lower, upper)


def graf_guekos_residual(model, t):
    """``t^-1 ||V* exp(-itH) V - exp(-itK)||``; tends to zero as ``t -> 0``."""
    _require_non_negative(model, "the Graf-Guekos residual")
    t = check_positive(t, "t")
    compressed = model.compress_function(np.exp(-1j * t * _spectrum(model)))
    return operator_norm(compressed - zeno_target(model, t)) / t


# -- non-semibounded counterexample ----------------------------------------

@dataclass(frozen=True)
class CounterexampleResult:
    t: float
    n: int
    identity_residual: float
    identity_residual_at_t: float
    limit_residual: float
    contraction_witness: float
    norms: np.ndarray
    note: str = (
        "momentum operator realized on a discrete circle of length 2*pi; "
        "t restricted so the translated window never wraps around"
    )

    def to_dict(self):
        return {
            "t": self.t,
            "n": self.n,
            "identity_residual": self.identity_residual,
            "identity_residual_at_t": self.identity_residual_at_t,
            "limit_residual": self.limit_residual,
            "contraction_witness": self.contraction_witness,
            "note": self.note,
        }


def translation(model, s):
    """The unitary ``exp(-isH)`` on the ambient space."""
    return apply_function(model.H, lambda x: np.exp(-1j * s * x))


def translated_window_projector(model, s):
    """Projection onto the window shifted by ``s``.

    On grid multiples of the step this is the coordinate projection onto the
    shifted grid points. Between grid points a coordinate window cannot be
    shifted, so the projector is transported by the translation group,
    ``exp(-isH) P exp(isH)``, which is the same operator whenever both are defined.
    """
    dx = model.meta["grid_step"]
    k = s / dx
    if abs(k - round(k)) <= 1e-9 * max(1.0, abs(k)):
        P = model.V.projector()
        return np.roll(np.roll(P, int(round(k)), axis=0), int(round(k)), axis=1)
    U = translation(model, s)
    return U @ model.V.projector() @ U.conj().T


def _identity_residual(model, s):
    V = model.V.isometry
    U = translation(model, s)
    lhs = V.conj().T @ U @ V
    rhs = V.conj().T @ translated_window_projector(model, s) @ U @ V
    return operator_norm(lhs - rhs)


def counterexample_run(model, t, n, test_vectors):
    """Non-unitary Zeno limit for the momentum model.

    Returns the residual of the translation identity
    ``P e^{-isH} P = P P_shifted e^{-isH} P`` at ``s = t/n`` (and at ``s = t``),
    the distance between ``(P e^{-itH/n} P)^n`` and ``P e^{-itH} P``, and the
    smallest norm ``||P e^{-itH} P f||`` over the test vectors.
    """
    if not model.out_of_assumption or "grid_step" not in model.meta:
        raise ValidationError("counterexample_run needs a momentum-circle model")
    t = check_positive(t, "t", strict=False)
    n = check_count(n, "n")
    X = check_vectors(test_vectors, model.rank, "test_vectors")
    a, b = model.meta["window"]
    if b + t > model.meta["chart_end"]:
        raise ValidationError(
            f"t={t} translates the window [{a}, {b}] past the chart end {model.meta['chart_end']}"
        )
    V = model.V.isometry
    if t == 0:
        return CounterexampleResult(0.0, n, 0.0, 0.0, 0.0, 1.0, np.linalg.norm(X, axis=0))
    limit = V.conj().T @ translation(model, t) @ V
    step = V.conj().T @ translation(model, t / n) @ V
    product = np.linalg.matrix_power(step, n)
    norms = np.linalg.norm(limit @ X, axis=0) / np.linalg.norm(X, axis=0)
    return CounterexampleResult(
        t=t,
        n=n,
        identity_residual=_identity_residual(model, t / n),
        identity_residual_at_t=_identity_residual(model, t),
        limit_residual=operator_norm(product - limit),
        contraction_witness=float(np.min(norms)),
        norms=norms,
    )
