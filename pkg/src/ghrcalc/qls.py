"""Quaternion least squares ``min ||b - A q||^2``.

Closed forms: ``grad_{q*} F = -(1/2) A^H (b - A q)``,
``H_{qq*} = (1/2) A^H A`` and ``H_{q^mu q*} = 0`` for mu in i, j, k.  The
minimizer solves the normal equation ``A^H A q = A^H b``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ghr import ScalarField
from .gradhess import HessianBundle
from .linalg import (
    QMatrix,
    QVector,
    condition_estimate,
    hermitian,
    matmul,
    matvec,
    random_qmatrix,
    random_qvector,
    solve,
)


@dataclass(frozen=True)
class QlsProblem:
    A: QMatrix
    b: QVector

    def __post_init__(self):
        m, n = self.A.shape
        if m < n:
            raise ValueError(f"least squares needs M >= N, got A of shape {self.A.shape}")
        if len(self.b) != m:
            raise ValueError(f"b has length {len(self.b)}, expected {m}")
        if not (np.all(np.isfinite(self.A.data)) and np.all(np.isfinite(self.b.data))):
            raise ValueError("problem data must be finite")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def to_json(self) -> dict:
        return {"A": self.A.to_json(), "b": self.b.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "QlsProblem":
        return cls(QMatrix(data["A"]), QVector(data["b"]))


def load_problem(path) -> QlsProblem:
    with open(path) as fh:
        return QlsProblem.from_json(json.load(fh))


def random_problem(rng: np.random.Generator, m: int, n: int) -> QlsProblem:
    return QlsProblem(random_qmatrix(rng, m, n), random_qvector(rng, m))


def residual(p: QlsProblem, q: QVector) -> QVector:
    if len(q) != p.n:
        raise ValueError(f"q has length {len(q)}, expected {p.n}")
    return p.b - matvec(p.A, q)


def qls_objective(p: QlsProblem, q: QVector) -> float:
    return residual(p, q).norm2()


def qls_gradient(p: QlsProblem, q: QVector) -> QVector:
    return matvec(hermitian(p.A), residual(p, q)) * -0.5


def qls_hessian(p: QlsProblem) -> HessianBundle:
    n = p.n
    zero = QMatrix.zeros(n, n)
    gram = matmul(hermitian(p.A), p.A)
    # exact symmetrization of rounding noise
    gram = QMatrix(0.5 * (gram.data + hermitian(gram).data))
    return HessianBundle(gram * 0.5, zero, zero, zero)


def qls_field(p: QlsProblem) -> ScalarField:
    return ScalarField(lambda q: qls_objective(p, q), p.n, "qls", real_valued=True)


def qls_solve(p: QlsProblem) -> QVector:
    """Solve the normal equation; raises SingularMatrixError if ``A^H A`` is singular."""
    ah = hermitian(p.A)
    return solve(matmul(ah, p.A), matvec(ah, p.b))


@dataclass(frozen=True)
class QlsSolution:
    q: QVector
    residual_norm: float
    normal_residual: float
    condition: float

    def to_json(self) -> dict:
        return {
            "q": self.q.to_json(),
            "residual_norm": self.residual_norm,
            "normal_equation_residual": self.normal_residual,
            "condition_estimate": self.condition,
        }


def qls_report(p: QlsProblem) -> QlsSolution:
    q = qls_solve(p)
    ah = hermitian(p.A)
    gram = matmul(ah, p.A)
    normal = (matvec(gram, q) - matvec(ah, p.b)).norm()
    return QlsSolution(q, residual(p, q).norm(), normal, condition_estimate(gram))
