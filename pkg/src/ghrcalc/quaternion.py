"""Quaternion scalars.

A quaternion ``q = a + ib + jc + kd`` is stored as four floats.  The
module offers an immutable :class:`Quaternion` value type for scalar work
and a handful of array kernels (:func:`qmul_array`, :func:`qconj_array`)
operating on float arrays whose trailing axis has length 4, which the
matrix code builds on.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class QuaternionDomainError(ValueError):
    """Raised when an operation needs a nonzero quaternion and got zero."""


def qmul_array(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product of broadcastable arrays with trailing axis 4."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p0, p1, p2, p3 = np.moveaxis(p, -1, 0)
    q0, q1, q2, q3 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
            p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
            p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
            p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
        ],
        axis=-1,
    )


_CONJ_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])


def qconj_array(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=float) * _CONJ_SIGNS


def left_matrix(q: Sequence[float]) -> np.ndarray:
    """4x4 real matrix L with ``L @ x == q * x`` on component vectors."""
    a, b, c, d = (float(v) for v in q)
    return np.array(
        [
            [a, -b, -c, -d],
            [b, a, -d, c],
            [c, d, a, -b],
            [d, -c, b, a],
        ]
    )


@dataclass(frozen=True, slots=True)
class Quaternion:
    """Immutable quaternion ``a + ib + jc + kd``.

    ``==`` compares components exactly; use :meth:`isclose` for a
    tolerance-based comparison.
    """

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, float(getattr(self, name)))

    # construction / conversion

    @classmethod
    def from_array(cls, arr: Iterable[float]) -> "Quaternion":
        a, b, c, d = (float(v) for v in arr)
        return cls(a, b, c, d)

    @classmethod
    def coerce(cls, value) -> "Quaternion":
        if isinstance(value, Quaternion):
            return value
        if isinstance(value, (int, float, np.floating, np.integer)):
            return cls(float(value))
        return cls.from_array(value)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])

    def __iter__(self):
        return iter((self.a, self.b, self.c, self.d))

    def __repr__(self):
        return f"Quaternion({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"

    def __str__(self):
        return f"({self.a:+.6g} {self.b:+.6g}i {self.c:+.6g}j {self.d:+.6g}k)"

    # parts

    @property
    def real(self) -> float:
        return self.a

    @property
    def vector(self) -> "Quaternion":
        return Quaternion(0.0, self.b, self.c, self.d)

    @property
    def is_pure(self) -> bool:
        return self.a == 0.0

    @property
    def is_real(self) -> bool:
        return self.b == 0.0 and self.c == 0.0 and self.d == 0.0

    # arithmetic

    def __add__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Quaternion(self.a + other, self.b, self.c, self.d)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(-self.a, -self.b, -self.c, -self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, (Quaternion, int, float, np.floating, np.integer)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return mul(self, other)
        if isinstance(other, (int, float, np.floating, np.integer)):
            s = float(other)
            return Quaternion(self.a * s, self.b * s, self.c * s, self.d * s)
        return NotImplemented

    def __rmul__(self, other):
        # only reals reach here; they commute with everything
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        """Right division ``self * other^{-1}``."""
        if isinstance(other, Quaternion):
            return mul(self, inverse(other))
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * (1.0 / float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return inverse(self) * float(other)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)):
            return NotImplemented
        if n < 0:
            return inverse(self) ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __abs__(self):
        return modulus(self)

    def conj(self) -> "Quaternion":
        return conjugate(self)

    def norm(self) -> float:
        return modulus(self)

    def norm2(self) -> float:
        return self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d

    def inverse(self) -> "Quaternion":
        return inverse(self)

    def rotate(self, mu: "Quaternion") -> "Quaternion":
        return rotate(self, mu)

    def isclose(self, other, atol: float = 1e-12, rtol: float = 0.0) -> bool:
        other = Quaternion.coerce(other)
        diff = modulus(self - other)
        return diff <= atol + rtol * max(modulus(self), modulus(other))


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)
ZERO = Quaternion()

UNITS = (ONE, I, J, K)


def mul(p: Quaternion, q: Quaternion) -> Quaternion:
    return Quaternion(
        p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
        p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
        p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
        p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
    )


def conjugate(q: Quaternion) -> Quaternion:
    return Quaternion(q.a, -q.b, -q.c, -q.d)


def modulus(q: Quaternion) -> float:
    return math.sqrt(q.norm2())


def _require_nonzero(q: Quaternion, what: str) -> float:
    n2 = q.norm2()
    if n2 == 0.0:
        raise QuaternionDomainError(f"{what} must be a nonzero quaternion")
    return n2


def inverse(q: Quaternion) -> Quaternion:
    """``q* / |q|^2``; zero has no inverse."""
    n2 = _require_nonzero(q, "operand of inverse")
    return Quaternion(q.a / n2, -q.b / n2, -q.c / n2, -q.d / n2)


def rotate(q: Quaternion, mu: Quaternion) -> Quaternion:
    """The rotation ``q^mu = mu q mu^{-1}``.

    Only the direction of ``mu`` matters.  The real part and the modulus of
    ``q`` are preserved.
    """
    n2 = _require_nonzero(mu, "rotation parameter mu")
    conj_mu = Quaternion(mu.a / n2, -mu.b / n2, -mu.c / n2, -mu.d / n2)
    return mul(mul(mu, q), conj_mu)


def rotate_array(q: np.ndarray, mu: Quaternion) -> np.ndarray:
    """Entrywise ``mu q mu^{-1}`` for an array with trailing axis 4."""
    n2 = _require_nonzero(mu, "rotation parameter mu")
    m = mu.as_array()
    return qmul_array(qmul_array(m, q), qconj_array(m) / n2)


def involution(q: Quaternion, eta: Quaternion) -> Quaternion:
    """Alias of :func:`rotate`, named for pure unit ``eta``."""
    return rotate(q, eta)


def polar(q: Quaternion) -> tuple[float, Quaternion, float]:
    """Return ``(|q|, axis, angle)`` with ``q = |q| (cos angle + axis sin angle)``.

    For real ``q`` the vector part has no direction; the axis is then ``i``
    by convention and the angle is 0 (positive) or pi (negative).
    """
    r = modulus(q)
    if r == 0.0:
        raise QuaternionDomainError("polar form of zero is undefined")
    v = math.sqrt(q.b * q.b + q.c * q.c + q.d * q.d)
    if v == 0.0:
        return r, I, (0.0 if q.a > 0 else math.pi)
    axis = Quaternion(0.0, q.b / v, q.c / v, q.d / v)
    # atan2 keeps full accuracy near 0 and pi where arccos(a/r) does not
    angle = math.atan2(v, q.a)
    return r, axis, angle


def from_polar(r: float, axis: Quaternion, angle: float) -> Quaternion:
    return Quaternion(math.cos(angle)) * r + axis * (r * math.sin(angle))


class Basis(NamedTuple):
    """Orthogonal basis ``{1, i^mu, j^mu, k^mu}``."""

    one: Quaternion
    i_mu: Quaternion
    j_mu: Quaternion
    k_mu: Quaternion

    def as_array(self) -> np.ndarray:
        return np.stack([e.as_array() for e in self])


def rotated_basis(mu: Quaternion) -> Basis:
    return Basis(ONE, rotate(I, mu), rotate(J, mu), rotate(K, mu))


# serialization


def to_json(q: Quaternion) -> list[float]:
    return [q.a, q.b, q.c, q.d]


def from_json(data: Sequence[float]) -> Quaternion:
    if len(data) != 4:
        raise ValueError(f"a quaternion needs 4 components, got {len(data)}")
    return Quaternion.from_array(data)


def dumps(q: Quaternion) -> str:
    return json.dumps(to_json(q))


def loads(text: str) -> Quaternion:
    return from_json(json.loads(text))


def write_csv(quats: Iterable[Quaternion], fh) -> None:
    """Write one quaternion per row as columns ``a,b,c,d`` (full precision)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["a", "b", "c", "d"])
    for q in quats:
        writer.writerow([repr(v) for v in q])


def read_csv(fh) -> list[Quaternion]:
    reader = csv.reader(fh)
    header = next(reader)
    if [h.strip() for h in header] != ["a", "b", "c", "d"]:
        raise ValueError(f"unexpected quaternion CSV header {header}")
    return [Quaternion(*(float(v) for v in row)) for row in reader if row]
