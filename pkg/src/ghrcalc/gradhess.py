"""Quaternion gradients, Jacobians and Hessians of fields on H^N.

Conventions
-----------
* ``gradient`` returns columns ``grad_q f`` and ``grad_{q*} f``; the
  derivative ``df/dq`` of a scalar is the matching row.
* Second-derivative blocks follow the Jacobian convention: entry
  ``(m, n)`` of ``H_{q^mu q^nu*}`` is ``d/dq_n^mu (df/dq_m^nu*)``.  Rows
  index the gradient entry, columns the differentiation variable.
* The augmented Hessian ``H_{hh*}`` has block row ``nu`` (inner, starred)
  and block column ``mu`` (outer), ``mu, nu`` running over ``1, i, j, k``.
* Real coordinates are ordered ``r = (q_a; q_b; q_c; q_d)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ghr import (
    DEFAULT_STEP,
    GhrSpec,
    ScalarField,
    combine_partials,
    partials_array,
)
from .linalg import QMatrix, QVector, augment_blocks, hermitian, j_matrix, matmul, matvec
from .quaternion import I, J, K, ONE, UNITS, Quaternion, inverse, qconj_array, qmul_array, rotate_array

HESSIAN_STEP = 1e-4
REAL_HESSIAN_STEP = 2e-3


@dataclass(frozen=True)
class GradientPair:
    grad: QVector
    conj_grad: QVector

    def row(self) -> QMatrix:
        """``df/dq`` as a 1 x N row."""
        return self.grad.T


@dataclass(frozen=True)
class HessianBundle:
    """``H_{q^mu q*}`` for mu in 1, i, j, k, plus optionally ``H_{qq}``.

    ``asymmetry`` records ``max |H - H^H|`` of ``Hqq_conj`` before it was
    symmetrized (0 for closed-form bundles).
    """

    Hqq_conj: QMatrix
    Hqi_conj: QMatrix
    Hqj_conj: QMatrix
    Hqk_conj: QMatrix
    Hqq: QMatrix | None = None
    asymmetry: float = 0.0

    @property
    def n(self) -> int:
        return self.Hqq_conj.shape[0]

    def blocks(self) -> tuple[QMatrix, QMatrix, QMatrix, QMatrix]:
        return (self.Hqq_conj, self.Hqi_conj, self.Hqj_conj, self.Hqk_conj)

    def cross_norm(self) -> float:
        return max(b.max_abs() for b in self.blocks()[1:])


@dataclass(frozen=True)
class AugmentedHessian:
    H: QMatrix

    @property
    def n(self) -> int:
        return self.H.shape[0] // 4

    def block(self, row: int, col: int) -> QMatrix:
        n = self.n
        return QMatrix(self.H.data[row * n : (row + 1) * n, col * n : (col + 1) * n])


# first order


def gradient(f: ScalarField, q: QVector, step: float | None = None) -> GradientPair:
    grad = np.empty((len(q), 4))
    conj = np.empty((len(q), 4))
    for n in range(len(q)):
        p = partials_array(f, q, n, step)
        grad[n] = combine_partials(p, GhrSpec(ONE))
        conj[n] = combine_partials(p, GhrSpec(ONE, conjugate=True))
    return GradientPair(QVector(grad), QVector(conj))


def conj_gradient(f: ScalarField, q: QVector, step: float | None = None) -> QVector:
    return gradient(f, q, step).conj_grad


def _all_partials(f: ScalarField, q: QVector, step: float | None) -> np.ndarray:
    """Partials of every coordinate, shape (N, 4 directions, 4)."""
    return np.stack([partials_array(f, q, n, step) for n in range(len(q))])


def augmented_gradient(f: ScalarField, q: QVector, step: float | None = None) -> QVector:
    """``grad_{h*} f = (grad_{q*}; grad_{q^i*}; grad_{q^j*}; grad_{q^k*})``."""
    p = _all_partials(f, q, step)
    return QVector(np.concatenate([combine_partials(p, GhrSpec(mu, conjugate=True)) for mu in UNITS]))


def augmented_derivative(f: ScalarField, q: QVector, step: float | None = None) -> QVector:
    """``df/dh = (df/dq, df/dq^i, df/dq^j, df/dq^k)`` stored as a flat vector."""
    p = _all_partials(f, q, step)
    return QVector(np.concatenate([combine_partials(p, GhrSpec(mu)) for mu in UNITS]))


def jacobian(
    F: Callable[[QVector], QVector],
    q: QVector,
    step: float | None = None,
) -> tuple[QMatrix, QMatrix]:
    """Jacobian ``dF/dq`` and conjugate Jacobian ``dF/dq*`` (entry (m, n) = dF_m/dq_n)."""
    n_in = len(q)
    cols, conj_cols = [], []
    for n in range(n_in):
        h = step if step is not None else DEFAULT_STEP * max(1.0, q[n].norm())
        parts = []
        for c in range(4):
            plus = q.data.copy()
            minus = q.data.copy()
            plus[n, c] += h
            minus[n, c] -= h
            fp, fm = F(QVector(plus)).data, F(QVector(minus)).data
            if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
                raise ArithmeticError(f"vector field is not finite near {q.to_json()}")
            parts.append((fp - fm) / (2.0 * h))
        p = np.stack(parts, axis=1)  # (M, 4 directions, 4)
        cols.append(combine_partials(p, GhrSpec(ONE)))
        conj_cols.append(combine_partials(p, GhrSpec(ONE, conjugate=True)))
    return QMatrix(np.stack(cols, axis=1)), QMatrix(np.stack(conj_cols, axis=1))


# second order


def nested_partials(f: ScalarField, q: QVector, step: float | None = None) -> np.ndarray:
    """Second partials by differencing the central-difference partials.

    Returns ``P`` of shape ``(N, 4, N, 4, 4)`` with ``P[n, c, m, d]`` the
    quaternion ``d/dr_{n,c} (d f / dr_{m,d})``.
    """
    if step is None:
        step = HESSIAN_STEP * max(1.0, q.max_abs())
    n_dim = len(q)
    out = np.empty((n_dim, 4, n_dim, 4, 4))
    for n in range(n_dim):
        for c in range(4):
            plus = q.data.copy()
            minus = q.data.copy()
            plus[n, c] += step
            minus[n, c] -= step
            gp = _all_partials(f, QVector(plus), step)
            gm = _all_partials(f, QVector(minus), step)
            out[n, c] = (gp - gm) / (2.0 * step)
    return out


def second_block(P: np.ndarray, outer: GhrSpec, inner: GhrSpec) -> QMatrix:
    """Matrix with entry (m, n) = d/dq_n^{outer} (df/dq_m^{inner}) from nested partials."""
    inner_d = combine_partials(P, inner)  # (n, c, m, 4)
    arranged = np.transpose(inner_d, (2, 0, 1, 3))  # (m, n, c, 4)
    return QMatrix(combine_partials(arranged, outer))


def _symmetrize(h: QMatrix) -> tuple[QMatrix, float]:
    asym = float(np.max(np.linalg.norm(h.data - hermitian(h).data, axis=-1))) if h.data.size else 0.0
    return QMatrix(0.5 * (h.data + hermitian(h).data)), asym


def hessian_bundle(f: ScalarField, q: QVector, step: float | None = None, with_hqq: bool = False) -> HessianBundle:
    P = nested_partials(f, q, step)
    conj_spec = GhrSpec(ONE, conjugate=True)
    hqq_conj, asym = _symmetrize(second_block(P, GhrSpec(ONE), conj_spec))
    hqq = second_block(P, GhrSpec(ONE), GhrSpec(ONE)) if with_hqq else None
    return HessianBundle(
        hqq_conj,
        second_block(P, GhrSpec(I), conj_spec),
        second_block(P, GhrSpec(J), conj_spec),
        second_block(P, GhrSpec(K), conj_spec),
        hqq,
        asym,
    )


def augmented_hessian(f: ScalarField, q: QVector, step: float | None = None) -> AugmentedHessian:
    """All sixteen blocks ``H_{q^mu q^nu*}`` from one set of nested partials."""
    P = nested_partials(f, q, step)
    rows = []
    for nu in UNITS:
        rows.append([second_block(P, GhrSpec(mu), GhrSpec(nu, conjugate=True)) for mu in UNITS])
    return AugmentedHessian(QMatrix.block(rows))


def augmented_from_bundle(bundle: HessianBundle) -> AugmentedHessian:
    """Assemble ``H_{hh*}`` from the four ``H_{q^mu q*}`` blocks.

    For real f the rotation rule gives
    ``H_{q^mu q^nu*} = (H_{q^{nu^-1 mu} q*})^nu`` entrywise; for units
    ``nu^-1 mu`` is plus or minus a unit and the sign does not affect the
    rotation.
    """
    by_unit = dict(zip(range(4), bundle.blocks()))
    rows = []
    for a, nu in enumerate(UNITS):
        row = []
        for b, mu in enumerate(UNITS):
            prod = inverse(nu) * mu
            idx = int(np.argmax(np.abs(prod.as_array())))
            row.append(QMatrix(rotate_array(by_unit[idx].data, nu)))
        rows.append(row)
    return AugmentedHessian(QMatrix.block(rows))


# real-coordinate oracles


def real_function(f: ScalarField, n: int) -> Callable[[np.ndarray], float]:
    """``f`` as a map R^{4N} -> R on ``r = (q_a; q_b; q_c; q_d)``."""
    return lambda r: f.evaluate(QVector.from_real(r)).a


def real_gradient(f: ScalarField, q: QVector, step: float = DEFAULT_STEP) -> np.ndarray:
    fr = real_function(f, len(q))
    r0 = q.to_real()
    h = step * max(1.0, float(np.max(np.abs(r0))) if r0.size else 1.0)
    out = np.empty(r0.size)
    for i in range(r0.size):
        e = np.zeros(r0.size)
        e[i] = h
        out[i] = (fr(r0 + e) - fr(r0 - e)) / (2.0 * h)
    return out


def _second_differences(fr, r0: np.ndarray, h: float) -> np.ndarray:
    size = r0.size
    f0 = fr(r0)
    eye = np.eye(size) * h
    out = np.empty((size, size))
    for i in range(size):
        out[i, i] = (fr(r0 + eye[i]) - 2.0 * f0 + fr(r0 - eye[i])) / (h * h)
        for k in range(i + 1, size):
            val = (
                fr(r0 + eye[i] + eye[k])
                - fr(r0 + eye[i] - eye[k])
                - fr(r0 - eye[i] + eye[k])
                + fr(r0 - eye[i] - eye[k])
            ) / (4.0 * h * h)
            out[i, k] = out[k, i] = val
    return out


def real_hessian(f: ScalarField, q: QVector, step: float = REAL_HESSIAN_STEP) -> np.ndarray:
    """Symmetric 4N x 4N real Hessian.

    Four-point second differences at steps h and h/2 combined by one
    Richardson step, so the truncation error is O(h^4) and exact for
    polynomials up to degree five.
    """
    fr = real_function(f, len(q))
    r0 = q.to_real()
    h = step * max(1.0, float(np.max(np.abs(r0))) if r0.size else 1.0)
    coarse = _second_differences(fr, r0, h)
    fine = _second_differences(fr, r0, h / 2)
    return (4.0 * fine - coarse) / 3.0


def j_real(n: int) -> tuple[QMatrix, QMatrix]:
    jm = j_matrix(n)
    return jm, hermitian(jm)


def real_gradient_from_augmented(aug_grad: QVector) -> np.ndarray:
    """``J^H grad_{h*} f``; the imaginary residue is dropped."""
    n = len(aug_grad) // 4
    return matvec(hermitian(j_matrix(n)), aug_grad).data[:, 0].copy()


def real_hessian_from_augmented(H: AugmentedHessian) -> np.ndarray:
    """``J^H H_{hh*} J``; the imaginary residue is dropped."""
    jm = j_matrix(H.n)
    return matmul(matmul(hermitian(jm), H.H), jm).data[:, :, 0].copy()


# identities


def gradient_correspondence_residual(f: ScalarField, q: QVector) -> float:
    """Relative gap between ``grad_r f`` and ``J^H grad_{h*} f``."""
    real = real_gradient(f, q)
    n = len(q)
    mapped = matvec(hermitian(j_matrix(n)), augmented_gradient(f, q)).data
    gap = np.max(np.abs(mapped[:, 0] - real))
    gap = max(gap, float(np.max(np.abs(mapped[:, 1:]))))
    return float(gap / max(1.0, float(np.max(np.abs(real)))))


def hessian_correspondence_residual(f: ScalarField, q: QVector, H: AugmentedHessian | None = None) -> float:
    """Max entry gap between the real Hessian and ``J^H H_{hh*} J``,
    relative to ``max(1, max |H_rr|)``."""
    H = H or augmented_hessian(f, q)
    jm = j_matrix(len(q))
    mapped = matmul(matmul(hermitian(jm), H.H), jm).data
    real = real_hessian(f, q)
    gap = max(np.max(np.abs(mapped[:, :, 0] - real)), np.max(np.abs(mapped[:, :, 1:])))
    return float(gap / max(1.0, float(np.max(np.abs(real)))))


def eigen_shift_check(
    f: ScalarField,
    q: QVector,
    lam: float,
    H: AugmentedHessian | None = None,
    H_rr: np.ndarray | None = None,
) -> float:
    """Max entrywise gap between ``H_{hh*} - lam I`` and ``J (H_rr - 4 lam I) J^H / 16``."""
    H = H or augmented_hessian(f, q)
    H_rr = real_hessian(f, q) if H_rr is None else H_rr
    size = 4 * len(q)
    jm = j_matrix(len(q))
    lhs = H.H - QMatrix.identity(size) * lam
    shifted = QMatrix.from_real(H_rr - 4.0 * lam * np.eye(size))
    rhs = matmul(matmul(jm, shifted), hermitian(jm)) / 16.0
    return float(np.max(np.linalg.norm(lhs.data - rhs.data, axis=-1)))


def hermitian_residual(m: QMatrix) -> float:
    return float(np.max(np.linalg.norm(m.data - hermitian(m).data, axis=-1)))


# Taylor expansion


def taylor2(
    f: ScalarField,
    q: QVector,
    dq: QVector,
    grad: GradientPair | None = None,
    bundle: HessianBundle | None = None,
) -> float:
    """Second-order model ``f(q) + 4 Re(df/dq dq) + 2 sum_mu Re(dq^H H_{q^mu q*} dq^mu)``."""
    grad = grad or gradient(f, q)
    bundle = bundle or hessian_bundle(f, q)
    first = qmul_array(grad.grad.data, dq.data).sum(axis=0)[0]
    second = 0.0
    dq_conj = qconj_array(dq.data)
    for mu, block in zip(UNITS, bundle.blocks()):
        hv = matvec(block, dq.rotate(mu)).data
        second += qmul_array(dq_conj, hv).sum(axis=0)[0]
    return f.real(q) + 4.0 * first + 2.0 * second


def taylor2_augmented(f: ScalarField, q: QVector, dq: QVector, aug_grad=None, H: AugmentedHessian | None = None) -> float:
    """``f + df/dh dh + dh^H H_{hh*} dh / 2`` in the augmented space."""
    H = H or augmented_hessian(f, q)
    dh = augment_blocks(dq)
    dfdh = augmented_derivative(f, q)
    first = qmul_array(dfdh.data, dh.data).sum(axis=0)[0]
    second = qmul_array(qconj_array(dh.data), matvec(H.H, dh).data).sum(axis=0)[0]
    return f.real(q) + first + 0.5 * second


# stationarity


def stationarity_measures(f: ScalarField, q: QVector) -> dict[str, float]:
    """Size of each of the five equivalent stationarity conditions.

    Every measure is the largest quaternion-entry modulus; the real
    gradient is grouped per quaternion coordinate and divided by 4 so that
    all five coincide for a real-valued field.
    """
    g = gradient(f, q)
    real = real_gradient(f, q).reshape(4, -1).T
    return {
        "df/dq": g.grad.max_abs(),
        "df/dq*": g.conj_grad.max_abs(),
        "df/dr": float(np.max(np.linalg.norm(real, axis=1)) / 4.0),
        "df/dh": augmented_derivative(f, q).max_abs(),
        "df/dh*": augmented_gradient(f, q).max_abs(),
    }


def is_stationary(f: ScalarField, q: QVector, tol: float) -> bool:
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    return gradient(f, q).conj_grad.max_abs() <= tol


def diagnostics(f: ScalarField, q: QVector, lambdas=(0.0, 0.5, -0.5)) -> dict:
    """Residuals of the gradient/Hessian identities at one point, JSON-ready."""
    H = augmented_hessian(f, q)
    H_rr = real_hessian(f, q)
    bundle = hessian_bundle(f, q)
    return {
        "field": f.name,
        "N": len(q),
        "gradient_correspondence": gradient_correspondence_residual(f, q),
        "hessian_correspondence": hessian_correspondence_residual(f, q, H),
        "eigen_shift": max(eigen_shift_check(f, q, lam, H, H_rr) for lam in lambdas),
        "hermitian_hqq_conj": bundle.asymmetry,
        "hermitian_hhh_conj": hermitian_residual(H.H),
    }


def dump_diagnostics(records: list[dict], fh) -> None:
    json.dump(records, fh, indent=2)
