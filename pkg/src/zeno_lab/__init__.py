"""Finite-dimensional laboratory for modified Zeno product formulas.

``(P phi(tH/n) P)^n -> exp(-itK)`` with ``K`` the compression of ``H`` to the
range of ``P``; see :mod:`zeno_lab.engine`.
"""
from .engine import (
    ConvergenceRecord,
    ZenoModel,
    certify_bound,
    counterexample_run,
    defect_operator,
    error_metrics,
    graf_guekos_residual,
    proof_path_diagnostics,
    sandwich_check,
    standard_test_vectors,
    time_averaged_error,
    zeno_generator,
    zeno_product,
    zeno_step,
    zeno_target,
)
from .estimators import PowerLawRate, ZenoProduct
from .exceptions import NumericalGuardError, ValidationError, ZenoLabError
from .functions import FunctionSpec, IntervalUnion, builtin, verify_admissible
from .harness import ExperimentConfig, fit_rate, run_experiment
from .models import (
    ModelSpec,
    commuting_model,
    lattice_laplacian_model,
    momentum_circle_model,
    random_model,
)
from .spectral import SpectralOperator, SubspaceProjection, hermitian_eig

__version__ = "0.1.0"
