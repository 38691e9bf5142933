import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from zeno_lab.engine import zeno_product, zeno_target
from zeno_lab.estimators import PowerLawRate, ZenoProduct
from zeno_lab.exceptions import ValidationError
from zeno_lab.functions import builtin
from zeno_lab.spectral import operator_norm

NS = np.array([4, 8, 16, 32, 64, 128, 256])


def test_power_law_exact_first_order():
    est = PowerLawRate().fit(NS, 3.0 / NS)
    assert abs(est.beta_ - 1.0) <= 1e-10
    assert abs(est.r_squared_ - 1.0) <= 1e-10
    assert est.prefactor_ == pytest.approx(3.0, rel=1e-10)
    np.testing.assert_allclose(est.predict([1000]), [3e-3], rtol=1e-10)


def test_power_law_square_root():
    est = PowerLawRate().fit(NS, 0.7 / np.sqrt(NS))
    assert abs(est.beta_ - 0.5) <= 1e-10


def test_power_law_converged_series():
    est = PowerLawRate().fit(NS, np.full(NS.shape, 1e-15))
    assert not est.fitted_ and np.isnan(est.beta_) and est.n_used_ == 0
    with pytest.raises(NotFittedError):
        est.predict([8])


def test_power_law_drops_floor_points():
    err = 1.0 / NS
    err[-2:] = 0.0
    est = PowerLawRate().fit(NS, err)
    assert est.n_used_ == len(NS) - 2 and abs(est.beta_ - 1) <= 1e-10


@pytest.mark.parametrize("X, y", [([1, 2], [1.0]), ([0, 1, 2], [1.0, 1.0, 1.0]), ([2, 2, 2], [1.0, 0.5, 0.2])])
def test_power_law_rejects(X, y):
    with pytest.raises(ValidationError):
        PowerLawRate().fit(X, y)


def test_power_law_params_and_clone():
    est = PowerLawRate(floor=1e-10, min_points=4)
    assert est.get_params() == {"floor": 1e-10, "min_points": 4}
    assert clone(est).get_params() == est.get_params()


def test_zeno_product_estimator_matches_engine(rand16):
    est = ZenoProduct(function="resolvent-2", t=0.5, n=32).fit(rand16)
    spec = builtin("resolvent-2")
    np.testing.assert_allclose(est.product_, zeno_product(rand16, spec, 0.5, 32))
    X = np.random.default_rng(0).standard_normal((5, rand16.rank))
    np.testing.assert_allclose(est.transform(X), X @ est.product_.T)
    assert est.score(X) <= 0


def test_zeno_product_from_matrices():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((6, 6))
    H = A @ A.T
    V = np.linalg.qr(rng.standard_normal((6, 2)))[0]
    est = ZenoProduct(t=1.0, n=2048).fit(H, V)
    K = V.T @ H @ V
    np.testing.assert_allclose(est.generator_, K, atol=1e-10)
    assert operator_norm(est.product_ - est.target_) <= 0.1
    assert est.get_params() == {"function": "resolvent-1", "t": 1.0, "n": 2048}


def test_zeno_product_validation():
    with pytest.raises(NotFittedError):
        ZenoProduct().transform(np.ones((1, 2)))
    with pytest.raises(ValidationError):
        ZenoProduct().fit(np.eye(3))
    est = ZenoProduct().fit(np.eye(3), np.eye(3)[:, :2])
    with pytest.raises(ValidationError):
        est.transform(np.ones((1, 3)))
    with pytest.raises(ValidationError):
        ZenoProduct().fit(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))
