"""GHR quaternion calculus: derivatives, gradients, Hessians and the
optimizers built on them."""

from .ghr import GhrSpec, ScalarField, d, ghr, hr_table, second_ghr
from .gradhess import (
    AugmentedHessian,
    GradientPair,
    HessianBundle,
    augmented_gradient,
    augmented_hessian,
    conj_gradient,
    gradient,
    hessian_bundle,
    jacobian,
    real_gradient,
    real_hessian,
    taylor2,
)
from .linalg import QMatrix, QVector, SingularMatrixError, augment, j_matrix, real_adjoint, solve
from .optimize import OptimizeConfig, OptimizeTrace, minimize, newton_minimize, qgd_minimize
from .qlms import FilterState, Sample, qlms_run, qlms_step, system_identification_stream
from .qls import QlsProblem, qls_report, qls_solve
from .quaternion import I, J, K, ONE, ZERO, Quaternion, QuaternionDomainError
from .rules import verify_rule

__version__ = "0.1.0"
