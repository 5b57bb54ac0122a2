"""Gradient descent and Newton on a quaternion least squares cost."""

import numpy as np

from ghrcalc.linalg import QVector, pinv_apply, real_adjoint
from ghrcalc.optimize import OptimizeConfig, minimize
from ghrcalc.qls import qls_field, qls_gradient, qls_hessian, random_problem

rng = np.random.default_rng(3)
p = random_problem(rng, 10, 3)
f = qls_field(p)
bundle = qls_hessian(p)
grad = lambda q: qls_gradient(p, q)  # noqa: E731
target = pinv_apply(p.A, p.b)

lam = float(np.linalg.eigvalsh(real_adjoint(bundle.Hqq_conj)).max())
for step in (0.1 / lam, 0.25 / lam):
    trace = minimize(f, QVector.zeros(3), OptimizeConfig(step_size=step, max_iters=300), grad)
    err = (trace.final - target).max_abs()
    print(f"QGD step {step:.4f}: {trace.termination} after {trace.iterations} iterations, error {err:.1e}")

for method in ("newton_full", "newton_approx"):
    trace = minimize(f, QVector.zeros(3), OptimizeConfig(method=method), grad, lambda q: bundle)
    err = (trace.final - target).max_abs()
    print(f"{method}: {trace.termination} after {trace.iterations} iteration(s), error {err:.1e}")

trace = minimize(f, QVector.zeros(3), OptimizeConfig(step_size=0.6 / lam, max_iters=200), grad)
print(f"QGD with a step past the stability limit: {trace.termination} after {trace.iterations} iterations")
