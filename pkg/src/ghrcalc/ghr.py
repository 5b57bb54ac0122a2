"""Numerical GHR derivatives.

Everything here is built on central differences of a field along the four
real directions of one quaternion coordinate.  Given those partials
``f_a, f_b, f_c, f_d`` and the rotated basis ``{1, i^mu, j^mu, k^mu}``, the
left derivatives are::

    df/dq^mu   = (f_a - f_b i^mu - f_c j^mu - f_d k^mu) / 4
    df/dq^mu*  = (f_a + f_b i^mu + f_c j^mu + f_d k^mu) / 4

and the right derivatives put the basis element on the left of each
partial.  The HR derivatives are the right derivatives at mu in {1,i,j,k}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, NamedTuple

import numpy as np

from .linalg import QVector
from .quaternion import (
    ONE,
    UNITS,
    Quaternion,
    QuaternionDomainError,
    conjugate,
    qmul_array,
    rotate,
    rotated_basis,
)

DEFAULT_STEP = 1e-5

Side = Literal["left", "right"]


class FieldEvaluationError(ArithmeticError):
    """A field returned a non-finite value."""

    def __init__(self, name: str, point: QVector, value):
        super().__init__(f"field {name or '<anonymous>'} is not finite at {point.to_json()}: {value}")
        self.point = point
        self.value = value


@dataclass(frozen=True)
class ScalarField:
    """A function ``f: H^N -> H``.

    ``func`` receives a :class:`QVector` of length ``dim`` and returns a
    Quaternion or a real number.  Fields flagged ``real_valued`` promise a
    zero vector part everywhere.  ``func`` must be safe to call from
    several threads at once.
    """

    func: Callable[[QVector], object]
    dim: int = 1
    name: str = ""
    real_valued: bool = False

    def __call__(self, q: QVector) -> Quaternion:
        return Quaternion.coerce(self.func(q))

    def evaluate(self, q: QVector) -> Quaternion:
        value = self(q)
        if not all(math.isfinite(v) for v in value):
            raise FieldEvaluationError(self.name, q, value)
        return value

    def real(self, q: QVector) -> float:
        return self.evaluate(q).a

    def with_name(self, name: str) -> "ScalarField":
        return ScalarField(self.func, self.dim, name, self.real_valued)


def field_product(f: ScalarField, g: ScalarField) -> ScalarField:
    return ScalarField(lambda q: f(q) * g(q), f.dim, f"({f.name})*({g.name})")


def field_compose(f: ScalarField, g: ScalarField) -> ScalarField:
    """``q -> f(g(q))`` for ``f`` on H^1."""
    if f.dim != 1:
        raise ValueError("outer field of a composition must act on H^1")
    return ScalarField(lambda q: f(QVector([g(q)])), g.dim, f"({f.name})o({g.name})", f.real_valued)


def field_rotated(f: ScalarField, nu: Quaternion) -> ScalarField:
    """``q -> f(q)^nu``."""
    return ScalarField(lambda q: rotate(f(q), nu), f.dim, f"({f.name})^nu", f.real_valued)


def field_conjugate(f: ScalarField) -> ScalarField:
    return ScalarField(lambda q: conjugate(f(q)), f.dim, f"({f.name})*", f.real_valued)


def field_left_scaled(nu: Quaternion, f: ScalarField) -> ScalarField:
    return ScalarField(lambda q: nu * f(q), f.dim, f"nu*({f.name})")


def field_right_scaled(f: ScalarField, nu: Quaternion) -> ScalarField:
    return ScalarField(lambda q: f(q) * nu, f.dim, f"({f.name})*nu")


class RealPartials(NamedTuple):
    """``(df/dq_a, df/dq_b, df/dq_c, df/dq_d)`` for one coordinate."""

    fa: Quaternion
    fb: Quaternion
    fc: Quaternion
    fd: Quaternion

    def as_array(self) -> np.ndarray:
        return np.stack([p.as_array() for p in self])


@dataclass(frozen=True)
class GhrSpec:
    """Which GHR derivative: rotation parameter, side and starred flag."""

    mu: Quaternion = field(default=ONE)
    side: Side = "left"
    conjugate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mu", Quaternion.coerce(self.mu))
        if self.mu.norm2() == 0.0:
            raise QuaternionDomainError("GHR rotation parameter mu must be nonzero")
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")


def default_step(q: QVector, coord: int) -> float:
    return DEFAULT_STEP * max(1.0, q[coord].norm())


def partials_array(f: ScalarField, q: QVector, coord: int, step: float | None = None) -> np.ndarray:
    """Central-difference partials as a (4 directions, 4 components) array."""
    if step is None:
        step = default_step(q, coord)
    if step <= 0:
        raise ValueError("finite-difference step must be positive")
    base = q.data
    out = np.empty((4, 4))
    for c in range(4):
        plus = base.copy()
        minus = base.copy()
        plus[coord, c] += step
        minus[coord, c] -= step
        fp = f.evaluate(QVector(plus)).as_array()
        fm = f.evaluate(QVector(minus)).as_array()
        out[c] = (fp - fm) / (2.0 * step)
    return out


def component_partials(f: ScalarField, q: QVector, coord: int = 0, step: float | None = None) -> RealPartials:
    return RealPartials(*(Quaternion.from_array(row) for row in partials_array(f, q, coord, step)))


_UNSTARRED = np.array([1.0, -1.0, -1.0, -1.0])
_STARRED = np.ones(4)


def combine_partials(partials: np.ndarray, spec: GhrSpec) -> np.ndarray:
    """Apply the GHR combination to partials of shape (..., 4 directions, 4).

    The direction axis is second to last; the result drops it.
    """
    basis = rotated_basis(spec.mu).as_array()
    signs = _STARRED if spec.conjugate else _UNSTARRED
    weighted = basis * signs[:, None]
    if spec.side == "left":
        terms = qmul_array(partials, weighted)
    else:
        terms = qmul_array(weighted, partials)
    return terms.sum(axis=-2) / 4.0


def ghr(
    f: ScalarField,
    q: QVector,
    coord: int = 0,
    spec: GhrSpec | None = None,
    step: float | None = None,
) -> Quaternion:
    """GHR derivative of ``f`` at ``q`` with respect to coordinate ``coord``."""
    spec = spec or GhrSpec()
    return Quaternion.from_array(combine_partials(partials_array(f, q, coord, step), spec))


def d(f: ScalarField, q: QVector, mu=ONE, conj: bool = False, coord: int = 0, step=None, side: Side = "left"):
    """Shorthand for ``ghr(f, q, coord, GhrSpec(mu, side, conj))``."""
    return ghr(f, q, coord, GhrSpec(mu, side, conj), step)


class HRTable(NamedTuple):
    """The eight HR derivatives of one coordinate."""

    d_q: Quaternion
    d_qi: Quaternion
    d_qj: Quaternion
    d_qk: Quaternion
    d_qconj: Quaternion
    d_qiconj: Quaternion
    d_qjconj: Quaternion
    d_qkconj: Quaternion


def hr_table(f: ScalarField, q: QVector, coord: int = 0, step: float | None = None) -> HRTable:
    partials = partials_array(f, q, coord, step)
    unstarred = [combine_partials(partials, GhrSpec(nu, "right", False)) for nu in UNITS]
    starred = [combine_partials(partials, GhrSpec(nu, "right", True)) for nu in UNITS]
    return HRTable(*(Quaternion.from_array(v) for v in unstarred + starred))


def second_ghr(
    f: ScalarField,
    q: QVector,
    outer: tuple[int, GhrSpec],
    inner: tuple[int, GhrSpec],
    step: float | None = None,
) -> Quaternion:
    """``d/d(outer) (d f / d(inner))`` by differencing the inner derivative.

    Both levels use the same step, by default ten times the first-order
    step, since nested differences magnify rounding.
    """
    (n, outer_spec), (m, inner_spec) = outer, inner
    if step is None:
        step = 10.0 * max(default_step(q, n), default_step(q, m))
    inner_field = ScalarField(lambda x: ghr(f, x, m, inner_spec, step), f.dim, f"d({f.name})")
    return ghr(inner_field, q, n, outer_spec, step)
