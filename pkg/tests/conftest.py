import numpy as np
import pytest

from zeno_lab.functions import builtin
from zeno_lab.models import commuting_model, lattice_laplacian_model, random_model


@pytest.fixture(scope="session")
def rand16():
    return random_model(16, 8, 4.0, seed=42)


@pytest.fixture(scope="session")
def laplacian16():
    return lattice_laplacian_model(16, (5, 12))


@pytest.fixture(scope="session")
def commuting8():
    return commuting_model(8, [2, 3, 5, 7], spectrum=np.linspace(0.0, 3.0, 8), seed=3)


@pytest.fixture(scope="session")
def resolvent1():
    return builtin("resolvent-1")


def scalar_model(lam):
    """1x1 model H = (lam), V = identity."""
    from zeno_lab.engine import ZenoModel
    from zeno_lab.spectral import SpectralOperator, SubspaceProjection

    H = SpectralOperator(np.array([float(lam)]), np.eye(1), non_negative=lam >= 0)
    return ZenoModel(H, SubspaceProjection(np.eye(1)), name=f"scalar-{lam}", non_negative=lam >= 0)


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """``criterion(label, ok, detail)`` records one PASS/FAIL line and asserts ``ok``."""

    def report(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        print(line)
        _ACCEPTANCE_LINES.append(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
