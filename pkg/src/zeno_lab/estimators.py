"""scikit-learn style wrappers around the engine.

``ZenoProduct`` fits a pair ``(H, V)`` and transforms row vectors of the
subspace by the interlaced product; ``PowerLawRate`` regresses an error
series on ``n`` in log-log coordinates.
"""
import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted, column_or_1d

from . import engine
from ._validation import check_matrix, check_vectors
from .exceptions import ValidationError
from .functions import builtin, FunctionSpec
from .spectral import SubspaceProjection, hermitian_eig


class ZenoProduct(TransformerMixin, BaseEstimator):
    """Interlaced product ``(P phi(tH/n) P)^n`` as a transformer.

    Parameters
    ----------
    function : str or FunctionSpec
        Builtin id or a prepared spec.
    t : float
        Total evolution time.
    n : int
        Number of interlaced steps.

    ``fit(H, V)`` takes the ambient Hermitian matrix and the isometry onto
    the subspace (or a ready :class:`~zeno_lab.engine.ZenoModel` as ``H``).
    ``transform(X)`` maps each row ``f`` of ``X`` to ``F(t/n)^n f``.
    """

    def __init__(self, function="resolvent-1", t=1.0, n=64):
        self.function = function
        self.t = t
        self.n = n

    def _spec(self):
        return self.function if isinstance(self.function, FunctionSpec) else builtin(self.function)

    def fit(self, X, y=None):
        if isinstance(X, engine.ZenoModel):
            model = X
        else:
            if y is None:
                raise ValidationError("fit needs the isometry V as y")
            H = hermitian_eig(check_matrix(X, "H", square=True))
            non_negative = H.eigenvalues[0] >= -1e-10 * max(1.0, H.eigenvalues[-1])
            if non_negative:
                H = type(H)(H.eigenvalues, H.eigenvectors, non_negative=True)
            model = engine.ZenoModel(H, SubspaceProjection(y), non_negative=bool(non_negative))
        self.model_ = model
        self.n_features_in_ = model.rank
        self.product_ = engine.zeno_product(model, self._spec(), self.t, self.n)
        if model.non_negative:
            self.generator_ = engine.zeno_generator(model)
            self.target_ = engine.zeno_target(model, self.t, self.generator_)
        return self

    def transform(self, X):
        check_is_fitted(self, "product_")
        X = check_vectors(np.asarray(X).T, self.n_features_in_, "X").T
        return X @ self.product_.T

    def score(self, X, y=None):
        """Negative mean distance between product and limit over the rows of ``X``."""
        check_is_fitted(self, "product_")
        if not hasattr(self, "target_"):
            raise NotFittedError("no unitary limit for a model that is not non-negative")
        X = check_vectors(np.asarray(X).T, self.n_features_in_, "X").T
        return -float(np.mean(np.linalg.norm(X @ (self.product_ - self.target_).T, axis=1)))


class PowerLawRate(RegressorMixin, BaseEstimator):
    """Fit ``error ~ prefactor * n**(-beta)`` by least squares on logs.

    Points with ``error <= floor`` are treated as converged and dropped; with
    fewer than ``min_points`` left the estimator is fitted but flagged with
    ``fitted_ = False`` and ``beta_ = nan``.
    """

    def __init__(self, floor=1e-14, min_points=3):
        self.floor = floor
        self.min_points = min_points

    def fit(self, X, y):
        n = column_or_1d(np.asarray(X, dtype=np.float64))
        err = column_or_1d(np.asarray(y, dtype=np.float64))
        if n.shape != err.shape:
            raise ValidationError("n values and errors must have equal length")
        if np.any(n <= 0):
            raise ValidationError("n values must be positive")
        keep = np.isfinite(err) & (err > self.floor)
        self.n_used_ = int(keep.sum())
        self.fitted_ = self.n_used_ >= self.min_points
        if not self.fitted_:
            self.beta_ = self.prefactor_ = self.r_squared_ = float("nan")
            return self
        logn, loge = np.log(n[keep]), np.log(err[keep])
        if np.ptp(logn) == 0:
            raise ValidationError("need at least two distinct n values")
        res = stats.linregress(logn, loge)
        self.beta_ = float(-res.slope)
        self.prefactor_ = float(np.exp(res.intercept))
        resid = loge - (res.intercept + res.slope * logn)
        ss_tot = float(np.sum((loge - loge.mean()) ** 2))
        ss_res = float(np.sum(resid ** 2))
        r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
        self.r_squared_ = float(min(1.0, max(0.0, r2)))
        return self

    def predict(self, X):
        check_is_fitted(self, "fitted_")
        if not self.fitted_:
            raise NotFittedError("too few usable points; no rate was fitted")
        n = column_or_1d(np.asarray(X, dtype=np.float64))
        return self.prefactor_ * n ** (-self.beta_)
