"""Dense quaternion vectors and matrices.

Storage is a float array with a trailing axis of length 4 holding the
components ``(a, b, c, d)``: shape ``(N, 4)`` for a :class:`QVector` (a
column) and ``(M, N, 4)`` for a :class:`QMatrix`.  Both are immutable.

Linear solves go through the real adjoint ``chi``, a 4M x 4N real matrix
in *left-multiplication* convention, laid out by component blocks so that
``chi(A) @ to_real(x) == to_real(A @ x)`` with ``to_real(x) = (x_a; x_b;
x_c; x_d)``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .quaternion import (
    Quaternion,
    qconj_array,
    qmul_array,
    rotate_array,
    I,
    J,
    K,
)

COND_LIMIT = 1e12

_SCALARS = (int, float, np.floating, np.integer)


class SingularMatrixError(np.linalg.LinAlgError):
    """The real adjoint of a system matrix is singular or too ill-conditioned."""

    def __init__(self, message: str, condition: float = np.inf):
        super().__init__(f"{message} (condition estimate {condition:.3g})")
        self.condition = condition


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class QVector:
    """Column vector in H^N."""

    __slots__ = ("_data",)

    def __init__(self, data):
        if isinstance(data, QVector):
            arr = data._data
        else:
            if isinstance(data, (list, tuple)) and data and isinstance(data[0], Quaternion):
                data = [q.as_array() for q in data]
            arr = np.array(data, dtype=float)
            if arr.ndim == 1 and arr.size == 0:
                arr = arr.reshape(0, 4)
            if arr.ndim != 2 or arr.shape[1] != 4:
                raise ValueError(f"QVector data must have shape (N, 4), got {arr.shape}")
            arr = _frozen(arr)
        self._data = arr

    @classmethod
    def zeros(cls, n: int) -> "QVector":
        return cls(np.zeros((n, 4)))

    @classmethod
    def from_real(cls, r: np.ndarray) -> "QVector":
        """Inverse of :meth:`to_real`."""
        r = np.asarray(r, dtype=float).reshape(-1)
        if r.size % 4:
            raise ValueError("real coordinate vector length must be a multiple of 4")
        return cls(r.reshape(4, -1).T)

    @classmethod
    def from_reals(cls, values: Sequence[float]) -> "QVector":
        data = np.zeros((len(values), 4))
        data[:, 0] = values
        return cls(data)

    @property
    def data(self) -> np.ndarray:
        return self._data

    def __len__(self):
        return self._data.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return QVector(self._data[idx])
        return Quaternion.from_array(self._data[idx])

    def __iter__(self):
        return (Quaternion.from_array(row) for row in self._data)

    def __repr__(self):
        return f"QVector({self._data.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, QVector):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(np.all(self._data == other._data))

    __hash__ = None

    def to_real(self) -> np.ndarray:
        """Real coordinates ``(q_a; q_b; q_c; q_d)`` of length 4N."""
        return self._data.T.reshape(-1).copy()

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return tuple(self._data[:, c].copy() for c in range(4))

    def replace(self, n: int, value) -> "QVector":
        data = self._data.copy()
        data[n] = Quaternion.coerce(value).as_array()
        return QVector(data)

    def conj(self) -> "QVector":
        return QVector(qconj_array(self._data))

    def rotate(self, mu: Quaternion) -> "QVector":
        """Entrywise ``q_n^mu``."""
        return QVector(rotate_array(self._data, mu))

    @property
    def H(self) -> "QMatrix":
        return QMatrix(qconj_array(self._data)[None, :, :])

    @property
    def T(self) -> "QMatrix":
        return QMatrix(self._data[None, :, :])

    def as_column(self) -> "QMatrix":
        return QMatrix(self._data[:, None, :])

    def norm2(self) -> float:
        return float(np.sum(self._data**2))

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def max_abs(self) -> float:
        """Largest entry modulus (infinity norm)."""
        if len(self) == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self._data, axis=1)))

    def __add__(self, other):
        if isinstance(other, QVector):
            return QVector(self._data + other._data)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, QVector):
            return QVector(self._data - other._data)
        return NotImplemented

    def __neg__(self):
        return QVector(-self._data)

    def __mul__(self, s):
        """Right scalar multiplication ``q_n * s``."""
        if isinstance(s, _SCALARS):
            return QVector(self._data * float(s))
        if isinstance(s, Quaternion):
            return QVector(qmul_array(self._data, s.as_array()))
        return NotImplemented

    def __rmul__(self, s):
        """Left scalar multiplication ``s * q_n``."""
        if isinstance(s, _SCALARS):
            return QVector(self._data * float(s))
        if isinstance(s, Quaternion):
            return QVector(qmul_array(s.as_array(), self._data))
        return NotImplemented

    def __truediv__(self, s):
        if isinstance(s, _SCALARS):
            return QVector(self._data / float(s))
        return NotImplemented

    def emul(self, other: "QVector") -> "QVector":
        """Entrywise product ``q_n * p_n``."""
        return QVector(qmul_array(self._data, other._data))

    def isclose(self, other: "QVector", atol: float = 1e-12) -> bool:
        return max_abs_diff(self, other) <= atol

    def to_json(self) -> list:
        return self._data.tolist()

    @classmethod
    def from_json(cls, data) -> "QVector":
        return cls(data)


def dot_t(p: QVector, q: QVector) -> Quaternion:
    """``p^T q = sum_n p_n q_n``."""
    return Quaternion.from_array(qmul_array(p.data, q.data).sum(axis=0))


def dot_h(p: QVector, q: QVector) -> Quaternion:
    """``p^H q = sum_n p_n^* q_n``."""
    return Quaternion.from_array(qmul_array(qconj_array(p.data), q.data).sum(axis=0))


class QMatrix:
    """Dense M x N quaternion matrix."""

    __slots__ = ("_data",)

    def __init__(self, data):
        if isinstance(data, QMatrix):
            arr = data._data
        else:
            if (
                isinstance(data, (list, tuple))
                and data
                and isinstance(data[0], (list, tuple))
                and data[0]
                and isinstance(data[0][0], Quaternion)
            ):
                data = [[q.as_array() for q in row] for row in data]
            arr = np.array(data, dtype=float)
            if arr.ndim != 3 or arr.shape[2] != 4:
                raise ValueError(f"QMatrix data must have shape (M, N, 4), got {arr.shape}")
            arr = _frozen(arr)
        self._data = arr

    @classmethod
    def zeros(cls, m: int, n: int) -> "QMatrix":
        return cls(np.zeros((m, n, 4)))

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        data = np.zeros((n, n, 4))
        data[np.arange(n), np.arange(n), 0] = 1.0
        return cls(data)

    @classmethod
    def from_real(cls, mat: np.ndarray) -> "QMatrix":
        mat = np.asarray(mat, dtype=float)
        data = np.zeros(mat.shape + (4,))
        data[..., 0] = mat
        return cls(data)

    @classmethod
    def from_components(cls, a, b, c, d) -> "QMatrix":
        return cls(np.stack([np.asarray(x, dtype=float) for x in (a, b, c, d)], axis=-1))

    @classmethod
    def from_columns(cls, cols: Sequence[QVector]) -> "QMatrix":
        return cls(np.stack([c.data for c in cols], axis=1))

    @classmethod
    def block(cls, blocks: Sequence[Sequence["QMatrix"]]) -> "QMatrix":
        rows = [np.concatenate([b.data for b in row], axis=1) for row in blocks]
        return cls(np.concatenate(rows, axis=0))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape[:2]

    def __getitem__(self, idx):
        if isinstance(idx, tuple) and len(idx) == 2 and all(isinstance(i, (int, np.integer)) for i in idx):
            return Quaternion.from_array(self._data[idx])
        sub = self._data[idx]
        if sub.ndim == 2:
            return QVector(sub)
        return QMatrix(sub)

    def column(self, n: int) -> QVector:
        return QVector(self._data[:, n])

    def row(self, m: int) -> QVector:
        return QVector(self._data[m])

    def __repr__(self):
        return f"QMatrix({self._data.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, QMatrix):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(np.all(self._data == other._data))

    __hash__ = None

    @property
    def H(self) -> "QMatrix":
        return hermitian(self)

    @property
    def T(self) -> "QMatrix":
        return QMatrix(np.swapaxes(self._data, 0, 1))

    def conj(self) -> "QMatrix":
        return QMatrix(qconj_array(self._data))

    def rotate(self, mu: Quaternion) -> "QMatrix":
        return QMatrix(rotate_array(self._data, mu))

    def __matmul__(self, other):
        if isinstance(other, QMatrix):
            return matmul(self, other)
        if isinstance(other, QVector):
            return matvec(self, other)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, QMatrix):
            return QMatrix(self._data + other._data)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, QMatrix):
            return QMatrix(self._data - other._data)
        return NotImplemented

    def __neg__(self):
        return QMatrix(-self._data)

    def __mul__(self, s):
        if isinstance(s, _SCALARS):
            return QMatrix(self._data * float(s))
        if isinstance(s, Quaternion):
            return QMatrix(qmul_array(self._data, s.as_array()))
        return NotImplemented

    def __rmul__(self, s):
        if isinstance(s, _SCALARS):
            return QMatrix(self._data * float(s))
        if isinstance(s, Quaternion):
            return QMatrix(qmul_array(s.as_array(), self._data))
        return NotImplemented

    def __truediv__(self, s):
        if isinstance(s, _SCALARS):
            return QMatrix(self._data / float(s))
        return NotImplemented

    def max_abs(self) -> float:
        if self._data.size == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self._data, axis=-1)))

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.sqrt(np.sum(self._data**2)))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return self.shape[0] == self.shape[1] and max_abs_diff(self, self.H) <= atol

    def isclose(self, other: "QMatrix", atol: float = 1e-12) -> bool:
        return max_abs_diff(self, other) <= atol

    def to_json(self) -> list:
        return self._data.tolist()

    @classmethod
    def from_json(cls, data) -> "QMatrix":
        return cls(data)


def max_abs_diff(x, y) -> float:
    """Largest entrywise modulus of ``x - y`` for vectors or matrices."""
    dx, dy = x.data, y.data
    if dx.shape != dy.shape:
        raise ValueError(f"shape mismatch {dx.shape} vs {dy.shape}")
    if dx.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(dx - dy, axis=-1)))


def hermitian(a: QMatrix) -> QMatrix:
    return QMatrix(qconj_array(np.swapaxes(a.data, 0, 1)))


def matmul(a: QMatrix, b: QMatrix) -> QMatrix:
    (m, k1), (k2, n) = a.shape, b.shape
    if k1 != k2:
        raise ValueError(f"inner dimensions disagree: {a.shape} @ {b.shape}")
    prod = qmul_array(a.data[:, :, None, :], b.data[None, :, :, :])
    return QMatrix(prod.sum(axis=1))


def matvec(a: QMatrix, x: QVector) -> QVector:
    if a.shape[1] != len(x):
        raise ValueError(f"dimension mismatch: {a.shape} @ ({len(x)},)")
    return QVector(qmul_array(a.data, x.data[None, :, :]).sum(axis=1))


# J matrix and augmented vectors

# sign pattern of the 4x4 block grid; column block s carries unit (1, i, j, k)[s]
_J_SIGNS = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)


def j_matrix(n: int) -> QMatrix:
    """The 4N x 4N matrix mapping real coordinates ``r`` to ``h = (q; q^i; q^j; q^k)``."""
    if n < 1:
        raise ValueError("j_matrix needs N >= 1")
    data = np.zeros((4 * n, 4 * n, 4))
    eye = np.arange(n)
    for r in range(4):
        for s in range(4):
            data[r * n + eye, s * n + eye, s] = _J_SIGNS[r, s]
    return QMatrix(data)


@dataclass(frozen=True)
class AugmentedVector:
    """``h = (q; q^i; q^j; q^k)`` together with its real dual ``r``."""

    h: QVector
    r: np.ndarray

    @property
    def n(self) -> int:
        return len(self.h) // 4

    @property
    def q(self) -> QVector:
        return self.h[: self.n]


def augment_blocks(q: QVector) -> QVector:
    return QVector(np.concatenate([q.data, q.rotate(I).data, q.rotate(J).data, q.rotate(K).data]))


def augment(q: QVector) -> AugmentedVector:
    r = q.to_real()
    r.flags.writeable = False
    return AugmentedVector(augment_blocks(q), r)


def from_augmented(h: QVector) -> np.ndarray:
    """Real coordinates ``r = J^H h / 4``; imaginary residue is dropped."""
    n = len(h) // 4
    r = matvec(hermitian(j_matrix(n)), h).data / 4.0
    return r[:, 0].copy()


def to_real(q: QVector) -> np.ndarray:
    return q.to_real()


def from_real(r: np.ndarray) -> QVector:
    return QVector.from_real(r)


# real adjoint and solves

# _LEFT[c, p, s]: coefficient of component c of q in entry (p, s) of the
# left-multiplication matrix of q
_LEFT = np.zeros((4, 4, 4))
for _c in range(4):
    _e = np.zeros(4)
    _e[_c] = 1.0
    for _s in range(4):
        _x = np.zeros(4)
        _x[_s] = 1.0
        _LEFT[_c, :, _s] = qmul_array(_e, _x)
del _c, _e, _s, _x


def real_adjoint(a: QMatrix) -> np.ndarray:
    """Real 4M x 4N image ``chi(A)`` with ``chi(A) @ x.to_real() == (A @ x).to_real()``."""
    m, n = a.shape
    return np.einsum("cps,mnc->pmsn", _LEFT, a.data).reshape(4 * m, 4 * n)


def from_real_adjoint(x: np.ndarray, m: int, n: int) -> QMatrix:
    """Read a quaternion matrix back out of its real adjoint (first column block)."""
    blocks = np.asarray(x).reshape(4, m, 4, n)
    return QMatrix(np.moveaxis(blocks[:, :, 0, :], 0, -1))


def condition_estimate(a: QMatrix) -> float:
    """2-norm condition number of ``chi(A)`` (equal to that of A)."""
    return float(np.linalg.cond(real_adjoint(a)))


def _factor(a: QMatrix):
    m, n = a.shape
    if m != n:
        raise ValueError(f"solve needs a square matrix, got {a.shape}")
    chi = real_adjoint(a)
    if not np.all(np.isfinite(chi)):
        raise SingularMatrixError("system matrix has non-finite entries")
    cond = float(np.linalg.cond(chi))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMatrixError("system matrix is singular to working precision", cond)
    return scipy.linalg.lu_factor(chi, check_finite=False), cond


def solve(a: QMatrix, b):
    """Solve ``A x = b`` for a QVector or QMatrix right-hand side.

    Raises :class:`SingularMatrixError` when the condition estimate of A
    exceeds ``COND_LIMIT``; no regularization is attempted.
    """
    lu, _ = _factor(a)
    n = a.shape[0]
    if isinstance(b, QVector):
        if len(b) != n:
            raise ValueError(f"right-hand side has length {len(b)}, expected {n}")
        x = scipy.linalg.lu_solve(lu, b.to_real(), check_finite=False)
        return QVector.from_real(x)
    if isinstance(b, QMatrix):
        if b.shape[0] != n:
            raise ValueError(f"right-hand side has {b.shape[0]} rows, expected {n}")
        cols = np.stack([b.column(k).to_real() for k in range(b.shape[1])], axis=1)
        x = scipy.linalg.lu_solve(lu, cols, check_finite=False)
        return QMatrix.from_columns([QVector.from_real(x[:, k]) for k in range(x.shape[1])])
    raise TypeError(f"cannot solve against {type(b).__name__}")


def inv(a: QMatrix) -> QMatrix:
    return solve(a, QMatrix.identity(a.shape[0]))


def pinv_apply(a: QMatrix, b: QVector) -> QVector:
    """``(A^H A)^{-1} A^H b`` through the normal equation (full column rank A)."""
    m, n = a.shape
    if m < n:
        raise ValueError(f"pinv_apply needs M >= N, got {a.shape}")
    ah = hermitian(a)
    return solve(matmul(ah, a), matvec(ah, b))


def is_positive_definite(a: QMatrix) -> bool:
    """Cholesky test on the symmetric part of ``chi(A)`` for Hermitian A."""
    chi = real_adjoint(a)
    try:
        np.linalg.cholesky(0.5 * (chi + chi.T))
    except np.linalg.LinAlgError:
        return False
    return True


# file formats


def dumps(x) -> str:
    return json.dumps(x.to_json())


def loads_matrix(text: str) -> QMatrix:
    return QMatrix(json.loads(text))


def loads_vector(text: str) -> QVector:
    return QVector(json.loads(text))


def write_csv(x, fh) -> None:
    """One row per entry: ``row, col, a, b, c, d``; vectors use ``col = 0``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["row", "col", "a", "b", "c", "d"])
    data = x.data if isinstance(x, QMatrix) else x.data[:, None, :]
    for m in range(data.shape[0]):
        for n in range(data.shape[1]):
            writer.writerow([m, n] + [repr(float(v)) for v in data[m, n]])


def read_csv(fh, vector: bool = False):
    reader = csv.reader(fh)
    header = [h.strip() for h in next(reader)]
    if header != ["row", "col", "a", "b", "c", "d"]:
        raise ValueError(f"unexpected matrix CSV header {header}")
    rows = [(int(r[0]), int(r[1]), [float(v) for v in r[2:6]]) for r in reader if r]
    m = 1 + max((r[0] for r in rows), default=-1)
    n = 1 + max((r[1] for r in rows), default=-1)
    data = np.zeros((m, n, 4))
    for i, j, comps in rows:
        data[i, j] = comps
    if vector:
        if n > 1:
            raise ValueError("CSV holds a matrix, not a vector")
        return QVector(data[:, 0, :] if n else np.zeros((0, 4)))
    return QMatrix(data)


def random_qvector(rng: np.random.Generator, n: int, scale: float = 1.0) -> QVector:
    return QVector(scale * rng.standard_normal((n, 4)))


def random_qmatrix(rng: np.random.Generator, m: int, n: int, scale: float = 1.0) -> QMatrix:
    return QMatrix(scale * rng.standard_normal((m, n, 4)))


def stack(vectors: Iterable[QVector]) -> QVector:
    return QVector(np.concatenate([v.data for v in vectors]))
