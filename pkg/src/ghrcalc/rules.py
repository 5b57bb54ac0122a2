"""Numerical check of the GHR calculus rules.

``verify_rule`` evaluates both sides of one rule with :func:`ghr` and
returns the modulus of their difference.  Rules:

``constant``       d(nu f)/dq^mu = nu df/dq^mu  and  d(f nu)/dq^mu = df/dq^{nu mu} nu
``product``        d(fg)/dq^mu  = f dg/dq^mu  + df/dq^{g mu}  g
``product_conj``   d(fg)/dq^mu* = f dg/dq^mu* + df/dq^{g mu}* g
``chain``          d f(g)/dq^mu  = sum_nu df/dg^nu dg^nu/dq^mu
``chain_conj``     d f(g)/dq^mu* = sum_nu df/dg^nu dg^nu/dq^mu*
``rotation``       (df/dq^mu)^nu = d f^nu / dq^{nu mu}  (and the starred form)
``conjugate``      (df/dq^mu)^* = d_r f^* / dq^mu*     (and the starred form)
``naive_product``  the classical rule d(fg)/dq = f dg/dq + df/dq g, which
                   does NOT hold; useful as a negative control

In the product rules ``g`` in the rotation parameter ``g mu`` is the value
``g(q)`` at the evaluation point, held constant.  For the chain rules
``f`` acts on H^1.  Residuals are maxima over the listed forms.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .ghr import (
    GhrSpec,
    ScalarField,
    Side,
    combine_partials,
    field_compose,
    field_conjugate,
    field_left_scaled,
    field_product,
    field_right_scaled,
    field_rotated,
    partials_array,
)
from .linalg import QVector
from .quaternion import ONE, UNITS, Quaternion, QuaternionDomainError

RULES = ("constant", "product", "product_conj", "chain", "chain_conj", "rotation", "conjugate")
NEGATIVE_CONTROLS = ("naive_product",)


class DerivativeCache:
    """Memoizes partials per (field, point, coordinate) and derived fields.

    A suite evaluates the same field at the same point for many values of
    mu; the partials do not depend on mu.  Not thread-safe; use one cache
    per worker.
    """

    def __init__(self):
        self._partials: dict = {}
        self._fields: dict = {}

    def partials(self, f: ScalarField, q: QVector, coord: int, step) -> np.ndarray:
        key = (id(f), coord, step, q.data.tobytes())
        hit = self._partials.get(key)
        if hit is None:
            hit = partials_array(f, q, coord, step)
            self._partials[key] = (hit, f)  # keep f alive so id() stays unique
            return hit
        return hit[0]

    def derived(self, key, build):
        hit = self._fields.get(key)
        if hit is None:
            hit = self._fields[key] = build()
        return hit


def _deriv(cache, f, q, mu, conj=False, coord=0, step=None, side: Side = "left") -> Quaternion:
    p = cache.partials(f, q, coord, step) if cache else partials_array(f, q, coord, step)
    return Quaternion.from_array(combine_partials(p, GhrSpec(mu, side, conj)))


def _derived(cache, key, build):
    return cache.derived(key, build) if cache else build()


def verify_rule(
    rule: str,
    f: ScalarField,
    g: ScalarField | None,
    q: QVector,
    mu: Quaternion = ONE,
    nu: Quaternion = ONE,
    coord: int = 0,
    step: float | None = None,
    cache: DerivativeCache | None = None,
) -> float:
    mu = Quaternion.coerce(mu)
    nu = Quaternion.coerce(nu)
    if mu.norm2() == 0.0:
        raise QuaternionDomainError("mu must be nonzero")
    D = lambda field, point, m, conj=False, side="left": _deriv(cache, field, point, m, conj, coord, step, side)

    if rule == "constant":
        if nu.norm2() == 0.0:
            raise QuaternionDomainError("nu must be nonzero for the constant rule")
        left = _derived(cache, ("lscale", id(f), nu), lambda: field_left_scaled(nu, f))
        right = _derived(cache, ("rscale", id(f), nu), lambda: field_right_scaled(f, nu))
        r1 = D(left, q, mu) - nu * D(f, q, mu)
        r2 = D(right, q, mu) - D(f, q, nu * mu) * nu
        return max(r1.norm(), r2.norm())

    if rule in ("product", "product_conj", "naive_product"):
        if g is None:
            raise ValueError(f"{rule} needs two fields")
        fg = _derived(cache, ("prod", id(f), id(g)), lambda: field_product(f, g))
        fq, gq = f(q), g(q)
        if rule == "naive_product":
            rhs = fq * D(g, q, ONE) + D(f, q, ONE) * gq
            return (D(fg, q, ONE) - rhs).norm()
        if gq.norm2() == 0.0:
            raise QuaternionDomainError("product rule needs g(q) != 0 for the rotation g(q) mu")
        conj = rule == "product_conj"
        rhs = fq * D(g, q, mu, conj) + D(f, q, gq * mu, conj) * gq
        return (D(fg, q, mu, conj) - rhs).norm()

    if rule in ("chain", "chain_conj"):
        if g is None:
            raise ValueError(f"{rule} needs two fields")
        conj = rule == "chain_conj"
        fog = _derived(cache, ("compose", id(f), id(g)), lambda: field_compose(f, g))
        inner = QVector([g(q)])
        rhs = Quaternion()
        for unit in UNITS:
            g_rot = _derived(cache, ("rot", id(g), unit), lambda: field_rotated(g, unit))
            rhs = rhs + _deriv(cache, f, inner, unit, False, 0, step) * D(g_rot, q, mu, conj)
        return (D(fog, q, mu, conj) - rhs).norm()

    if rule == "rotation":
        if nu.norm2() == 0.0:
            raise QuaternionDomainError("nu must be nonzero for the rotation rule")
        f_rot = _derived(cache, ("rot", id(f), nu), lambda: field_rotated(f, nu))
        worst = 0.0
        for conj in (False, True):
            lhs = D(f, q, mu, conj).rotate(nu)
            worst = max(worst, (lhs - D(f_rot, q, nu * mu, conj)).norm())
        return worst

    if rule == "conjugate":
        f_conj = _derived(cache, ("conj", id(f)), lambda: field_conjugate(f))
        worst = 0.0
        for conj in (False, True):
            lhs = D(f, q, mu, conj).conj()
            worst = max(worst, (lhs - D(f_conj, q, mu, not conj, "right")).norm())
        return worst

    raise ValueError(f"unknown rule {rule!r}")


@dataclass
class RuleRecord:
    rule: str
    field: str
    mu: list
    nu: list
    residual: float
    passed: bool
    point: list | None = None
    g: str | None = None

    def to_json(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def random_mu(rng: np.random.Generator) -> Quaternion:
    """A random nonzero quaternion of modulus between 0.5 and 2."""
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return Quaternion.from_array(v * rng.uniform(0.5, 2.0))


def random_point(rng: np.random.Generator, n: int = 1, low: float = 0.5, high: float = 1.5) -> QVector:
    """Entries with modulus uniform in [low, high] and uniformly random direction."""
    v = rng.standard_normal((n, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return QVector(v * rng.uniform(low, high, size=(n, 1)))
