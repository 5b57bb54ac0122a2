"""Quaternion gradient descent and quaternion Newton methods.

Both work directly on ``q`` in H^N:

* QGD:    ``dq = -4 alpha grad_{q*} f``
* Newton: the first block of ``H_{hh*} dh = -grad_{h*} f``, obtained from
  the partitioned inverse of the augmented Hessian (``newton_step_full``)
  or approximated by ``dq = -H_{qq*}^{-1} grad_{q*} f``
  (``newton_step_approx``).

Gradients and Hessian bundles are computed numerically unless the caller
passes closed-form callbacks (see :mod:`ghrcalc.qls`).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal

import numpy as np

from .ghr import ScalarField
from .gradhess import (
    AugmentedHessian,
    HessianBundle,
    augmented_from_bundle,
    conj_gradient,
    hessian_bundle,
    real_hessian_from_augmented,
)
from .linalg import (
    QMatrix,
    QVector,
    SingularMatrixError,
    augment_blocks,
    hermitian,
    is_positive_definite,
    matmul,
    matvec,
    solve,
)
from .quaternion import qconj_array, qmul_array

Method = Literal["qgd", "newton_full", "newton_approx"]
Termination = Literal["converged", "max_iters", "singular_hessian", "diverged"]

DIVERGENCE_LIMIT = 1e12

GradientFn = Callable[[QVector], QVector]
HessianFn = Callable[[QVector], HessianBundle]


class SingularHessianError(SingularMatrixError):
    """The Hessian (or its Schur complement) cannot be inverted."""


@dataclass(frozen=True)
class OptimizeConfig:
    step_size: float = 0.1
    max_iters: int = 100
    grad_tol: float = 1e-8
    hessian_regularization: float = 0.0
    method: Method = "qgd"
    backtracking: bool = False

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.hessian_regularization < 0:
            raise ValueError("hessian_regularization must be nonnegative")
        if self.method not in ("qgd", "newton_full", "newton_approx"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class OptimizeTrace:
    iterates: list[QVector] = field(default_factory=list)
    objective_values: list[float] = field(default_factory=list)
    gradient_norms: list[float] = field(default_factory=list)
    termination: Termination = "max_iters"

    @property
    def iterations(self) -> int:
        return max(len(self.iterates) - 1, 0)

    @property
    def final(self) -> QVector:
        return self.iterates[-1]

    def record(self, q: QVector, value: float, gnorm: float) -> None:
        self.iterates.append(q)
        self.objective_values.append(value)
        self.gradient_norms.append(gnorm)

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "objective", "grad_norm"])
        for k, (v, g) in enumerate(zip(self.objective_values, self.gradient_norms)):
            writer.writerow([k, repr(v), repr(g)])

    def to_json(self) -> dict:
        return {
            "termination": self.termination,
            "iterations": self.iterations,
            "objective": self.objective_values,
            "grad_norm": self.gradient_norms,
            "iterates": [q.to_json() for q in self.iterates],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


# gradient descent


def qgd_step(f: ScalarField, q: QVector, alpha: float, grad: QVector | None = None) -> QVector:
    """``q - 4 alpha grad_{q*} f``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    grad = conj_gradient(f, q) if grad is None else grad
    return q - grad * (4.0 * alpha)


def directional_derivative(conj_grad: QVector, dq: QVector) -> float:
    """First-order change ``4 Re(df/dq dq)`` with ``df/dq = (grad_{q*} f)^H``."""
    return 4.0 * float(qmul_array(qconj_array(conj_grad.data), dq.data).sum(axis=0)[0])


def _backtrack(f, q, dq, value, conj_grad, shrink=0.5, c1=1e-4, max_halvings=30):
    slope = directional_derivative(conj_grad, dq)
    t = 1.0
    for _ in range(max_halvings):
        trial = q + dq * t
        if f.real(trial) <= value + c1 * t * slope:
            return trial
        t *= shrink
    return q + dq * t


def _diverged(value: float) -> bool:
    return not math.isfinite(value) or abs(value) > DIVERGENCE_LIMIT


def qgd_minimize(
    f: ScalarField,
    q0: QVector,
    config: OptimizeConfig,
    gradient: GradientFn | None = None,
) -> OptimizeTrace:
    grad_fn = gradient or (lambda x: conj_gradient(f, x))
    trace = OptimizeTrace()
    q = q0
    value = f.real(q)
    g = grad_fn(q)
    trace.record(q, value, g.max_abs())
    for _ in range(config.max_iters):
        if trace.gradient_norms[-1] <= config.grad_tol:
            break
        if config.backtracking:
            q = _backtrack(f, q, g * (-4.0 * config.step_size), value, g)
        else:
            q = qgd_step(f, q, config.step_size, g)
        value = f.real(q)
        if _diverged(value):
            trace.record(q, value, float("nan"))
            trace.termination = "diverged"
            return trace
        g = grad_fn(q)
        trace.record(q, value, g.max_abs())
    trace.termination = "converged" if trace.gradient_norms[-1] <= config.grad_tol else "max_iters"
    return trace


# Newton


def _regularize(block: QMatrix, pd: Callable[[QMatrix], bool], extra: float) -> QMatrix:
    """Add ``extra`` I, then once more ``1e-8 trace/N`` I if the PD test fails."""
    n = block.shape[0]
    if extra > 0:
        block = block + QMatrix.identity(n) * extra
    if not pd(block):
        eps = 1e-8 * abs(float(np.trace(block.data[:, :, 0]))) / n
        block = block + QMatrix.identity(n) * eps
    return block


def _solve(a, b):
    try:
        return solve(a, b)
    except SingularMatrixError as exc:
        raise SingularHessianError("Hessian block is singular", exc.condition) from exc


def newton_step_approx(
    f: ScalarField,
    q: QVector,
    bundle: HessianBundle | None = None,
    conj_grad: QVector | None = None,
    regularization: float = 0.0,
) -> QVector:
    """``-H_{qq*}^{-1} grad_{q*} f``."""
    bundle = bundle or hessian_bundle(f, q)
    g = conj_gradient(f, q) if conj_grad is None else conj_grad
    hqq = _regularize(bundle.Hqq_conj, is_positive_definite, regularization)
    return -_solve(hqq, g)


def _augmented_pd(H: QMatrix) -> bool:
    """PD test on the real image ``J^H H J`` of an augmented Hessian."""
    real = real_hessian_from_augmented(AugmentedHessian(H))
    try:
        np.linalg.cholesky(0.5 * (real + real.T))
    except np.linalg.LinAlgError:
        return False
    return True


def newton_step_full(
    f: ScalarField,
    q: QVector,
    bundle: HessianBundle | None = None,
    conj_grad: QVector | None = None,
    regularization: float = 0.0,
) -> QVector:
    """Newton increment from the partitioned inverse of ``H_{hh*}``.

    With ``H_{hh*} = [[H_{qq*}, B], [C, D]]`` (C the three blocks
    ``H_{q q^mu*}`` below ``H_{qq*}``, ``B = C^H``), the Schur complement
    ``T = D - C H_{qq*}^{-1} B`` and ``L = H_{qq*}^{-1} C^H``::

        dq = -H_{qq*}^{-1} g + L T^{-1} (g_ijk - C H_{qq*}^{-1} g)

    where ``g = grad_{q*} f`` and ``g_ijk`` stacks the gradients with
    respect to ``q^{i*}, q^{j*}, q^{k*}``.  T is formed and solved
    explicitly rather than through its block-inverse entries.
    """
    bundle = bundle or hessian_bundle(f, q)
    g = conj_gradient(f, q) if conj_grad is None else conj_grad
    n = len(q)
    H = augmented_from_bundle(bundle).H
    H = _regularize(H, _augmented_pd, regularization)
    hqq = QMatrix(H.data[:n, :n])
    C = QMatrix(H.data[n:, :n])
    D = QMatrix(H.data[n:, n:])
    aug = augment_blocks(g)  # real f: grad_{q^mu*} f = (grad_{q*} f)^mu
    g_ijk = QVector(aug.data[n:])

    hinv_g = _solve(hqq, g)
    L = _solve(hqq, hermitian(C))
    T = D - matmul(C, L)
    rhs = g_ijk - matvec(C, hinv_g)
    return -hinv_g + matvec(L, _solve(T, rhs))


def augmented_newton_step(
    f: ScalarField,
    q: QVector,
    bundle: HessianBundle | None = None,
    conj_grad: QVector | None = None,
) -> QVector:
    """Solve ``H_{hh*} dh = -grad_{h*} f`` directly; returns all 4N entries of dh."""
    bundle = bundle or hessian_bundle(f, q)
    g = conj_gradient(f, q) if conj_grad is None else conj_grad
    H = augmented_from_bundle(bundle).H
    return -_solve(H, augment_blocks(g))


def newton_minimize(
    f: ScalarField,
    q0: QVector,
    config: OptimizeConfig,
    gradient: GradientFn | None = None,
    hessian: HessianFn | None = None,
) -> OptimizeTrace:
    """Unit-step Newton iterations (``newton_full`` unless config says ``newton_approx``)."""
    grad_fn = gradient or (lambda x: conj_gradient(f, x))
    hess_fn = hessian or (lambda x: hessian_bundle(f, x))
    step_fn = newton_step_approx if config.method == "newton_approx" else newton_step_full
    trace = OptimizeTrace()
    q = q0
    value = f.real(q)
    g = grad_fn(q)
    trace.record(q, value, g.max_abs())
    for _ in range(config.max_iters):
        if trace.gradient_norms[-1] <= config.grad_tol:
            break
        try:
            dq = step_fn(f, q, hess_fn(q), g, config.hessian_regularization)
        except SingularHessianError:
            trace.termination = "singular_hessian"
            return trace
        q = _backtrack(f, q, dq, value, g) if config.backtracking else q + dq
        value = f.real(q)
        if _diverged(value):
            trace.record(q, value, float("nan"))
            trace.termination = "diverged"
            return trace
        g = grad_fn(q)
        trace.record(q, value, g.max_abs())
    trace.termination = "converged" if trace.gradient_norms[-1] <= config.grad_tol else "max_iters"
    return trace


def minimize(
    f: ScalarField,
    q0: QVector,
    config: OptimizeConfig,
    gradient: GradientFn | None = None,
    hessian: HessianFn | None = None,
) -> OptimizeTrace:
    """Dispatch on ``config.method``."""
    if config.method == "qgd":
        return qgd_minimize(f, q0, config, gradient)
    return newton_minimize(f, q0, config, gradient, hessian)


def config_from_dict(data: dict) -> OptimizeConfig:
    known = set(asdict(OptimizeConfig()).keys())
    return OptimizeConfig(**{k: v for k, v in data.items() if k in known})
