"""Verification suite over the built-in field corpus.

Produces a flat list of :class:`~ghrcalc.rules.RuleRecord` covering the
calculus rules, the negative control, and the gradient/Hessian identities.
The same tolerances are used by the acceptance tests and by ``ghrcalc
verify``.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fields
from .ghr import GhrSpec, ScalarField, second_ghr
from .gradhess import (
    augmented_hessian,
    eigen_shift_check,
    gradient,
    gradient_correspondence_residual,
    hermitian_residual,
    hessian_bundle,
    hessian_correspondence_residual,
    real_hessian,
    taylor2,
)
from .linalg import QVector
from .quaternion import ONE, UNITS, Quaternion
from .rules import RULES, DerivativeCache, RuleRecord, random_mu, random_point, verify_rule

TOL = {
    "rule": 1e-6,
    "naive_product_margin": 0.1,
    "worked_derivative": 1e-8,
    "gradient_correspondence": 1e-6,
    "hessian_correspondence": 1e-5,
    "eigen_shift": 1e-6,
    "hermitian": 1e-6,
    "laplacian": 1e-5,
    "second_conjugate": 1e-5,
}
TAYLOR_RATIO = (0.09, 0.16)


@dataclass(frozen=True)
class SuiteConfig:
    points: int = 20
    mus: int = 10
    dims: tuple[int, ...] = (1, 2, 4)
    identity_points: int = 2
    lambdas: int = 10
    fault: bool = False
    parallel: int = 1


def _q(x: Quaternion) -> list:
    return list(x)


def rule_records(
    f: ScalarField,
    g: ScalarField,
    rng: np.random.Generator,
    points: int,
    mus: int,
    fault: bool = False,
) -> list[RuleRecord]:
    """All rules for one (f, g) pair at ``points`` points times ``mus`` values of mu."""
    records = []
    cache = DerivativeCache()
    tol = TOL["rule"]
    for _ in range(points):
        q = random_point(rng)
        for _ in range(mus):
            mu, nu = random_mu(rng), random_mu(rng)
            for rule in RULES:
                other = g if rule in ("product", "product_conj", "chain", "chain_conj") else None
                if fault and rule == "product":
                    res = _faulty_product(f, g, q, mu, cache)
                else:
                    res = verify_rule(rule, f, other, q, mu, nu, cache=cache)
                records.append(
                    RuleRecord(rule, f.name, _q(mu), _q(nu), res, res < tol, q.to_json(), other.name if other else None)
                )
    return records


def _faulty_product(f, g, q, mu, cache) -> float:
    """Product rule with the sign of the second term flipped (negative control for the harness)."""
    from .rules import _deriv, _derived
    from .ghr import field_product

    fg = _derived(cache, ("prod", id(f), id(g)), lambda: field_product(f, g))
    fq, gq = f(q), g(q)
    rhs = fq * _deriv(cache, g, q, mu) - _deriv(cache, f, q, gq * mu) * gq
    return (_deriv(cache, fg, q, mu) - rhs).norm()


def naive_product_records(rng: np.random.Generator, points: int) -> list[RuleRecord]:
    """The classical product rule on ``|q|^2 = q q*`` must fail by more than 0.1."""
    f, g = fields.identity_field(), fields.conjugate_field()
    out = []
    while len(out) < points:
        q = random_point(rng)
        if q[0].vector.norm() <= 0.1:
            continue
        res = verify_rule("naive_product", f, g, q)
        out.append(
            RuleRecord("naive_product", "q*q^*", _q(ONE), _q(ONE), res, res > TOL["naive_product_margin"], q.to_json(), g.name)
        )
    return out


def worked_derivative_records(rng: np.random.Generator, points: int) -> list[RuleRecord]:
    """``d|q|^2/dq = q*/2``."""
    f = fields.modulus_squared_field()
    out = []
    for _ in range(points):
        q = QVector(rng.uniform(-2, 2, size=(1, 4)))
        res = (gradient(f, q).grad[0] - q[0].conj() * 0.5).norm()
        out.append(RuleRecord("worked_derivative", f.name, _q(ONE), _q(ONE), res, res < TOL["worked_derivative"], q.to_json()))
    return out


def taylor_ratios(f: ScalarField, q: QVector, direction: QVector, scales) -> list[float]:
    """``remainder(s/2) / remainder(s)`` along ``direction`` for each scale s."""
    grad = gradient(f, q)
    bundle = hessian_bundle(f, q)

    def remainder(s):
        dq = direction * s
        return abs(f.real(q + dq) - taylor2(f, q, dq, grad, bundle))

    return [remainder(s / 2) / remainder(s) for s in scales]


TAYLOR_SCALES = tuple(0.01 * 2.0**-k for k in range(5))  # 0.01 down to 6.25e-4, a decade-plus


def identity_records(f: ScalarField, rng: np.random.Generator, cfg: SuiteConfig) -> list[RuleRecord]:
    out = []
    n = f.dim

    def rec(name, res, ok, mu=None, nu=None, q=None):
        out.append(RuleRecord(name, f.name, mu, nu, float(res), bool(ok), q.to_json() if q is not None else None))

    for _ in range(cfg.identity_points):
        q = random_point(rng, n)
        res = gradient_correspondence_residual(f, q)
        rec("gradient_correspondence", res, res < TOL["gradient_correspondence"], q=q)

        H = augmented_hessian(f, q)
        H_rr = real_hessian(f, q)
        res = hessian_correspondence_residual(f, q, H)
        rec("hessian_correspondence", res, res < TOL["hessian_correspondence"], q=q)
        for lam in rng.uniform(-1, 1, size=cfg.lambdas):
            res = eigen_shift_check(f, q, float(lam), H, H_rr)
            rec("eigen_shift", res, res < TOL["eigen_shift"], mu=[float(lam), 0.0, 0.0, 0.0], q=q)

        bundle = hessian_bundle(f, q)
        rec("hermitian_hqq_conj", bundle.asymmetry, bundle.asymmetry < TOL["hermitian"], q=q)
        res = hermitian_residual(H.H)
        rec("hermitian_hhh_conj", res, res < TOL["hermitian"], q=q)

        # Laplacian identity on coordinate 0 for the canonical units and one random unit mu,
        # relative to max(1, |laplacian|) like the Hessian correspondence
        lap = float(np.trace(H_rr.reshape(4, n, 4, n)[:, 0, :, 0]))
        unit_mu = random_mu(rng)
        unit_mu = unit_mu / unit_mu.norm()
        for mu in UNITS + (unit_mu,):
            val = second_ghr(f, q, (0, GhrSpec(mu)), (0, GhrSpec(mu, conjugate=True)))
            res = (val * 16.0 - lap).norm() / max(1.0, abs(lap))
            rec("laplacian", res, res < TOL["laplacian"], mu=_q(mu), q=q)

        mu, nu = random_mu(rng), random_mu(rng)
        lhs = second_ghr(f, q, (0, GhrSpec(mu)), (0, GhrSpec(nu))).conj()
        rhs = second_ghr(f, q, (0, GhrSpec(nu, conjugate=True)), (0, GhrSpec(mu, conjugate=True)))
        res = (lhs - rhs).norm()
        rec("second_conjugate", res, res < TOL["second_conjugate"], mu=_q(mu), nu=_q(nu), q=q)

        if not fields.is_quadratic(f):
            direction = random_point(rng, n, 1.0, 1.0) / np.sqrt(n)
            ratios = taylor_ratios(f, q, direction, TAYLOR_SCALES)
            lo, hi = TAYLOR_RATIO
            worst = max(ratios, key=lambda r: abs(r - 0.125))
            rec("taylor_ratio", worst, all(lo <= r <= hi for r in ratios), q=q)
    return out


def _run_job(job: tuple) -> list[RuleRecord]:
    # jobs name fields by index so they can cross process boundaries
    kind, index, seed, seq, cfg = job
    rng = np.random.default_rng(seq)
    if kind == "rule":
        f, g = fields.rule_pairs()[index]
        return rule_records(f, g, rng, cfg.points, cfg.mus, cfg.fault)
    if kind == "identity":
        n, k = index
        return identity_records(fields.real_corpus(n, seed)[k], rng, cfg)
    if kind == "naive":
        return naive_product_records(rng, cfg.points)
    return worked_derivative_records(rng, 100)


def suite_jobs(seed: int, cfg: SuiteConfig) -> list[tuple]:
    n_pairs = len(fields.rule_pairs())
    n_real = len(fields.real_corpus(1, seed))
    specs = [("rule", k) for k in range(n_pairs)]
    specs += [("identity", (n, k)) for n in cfg.dims for k in range(n_real)]
    specs += [("naive", None), ("worked", None)]
    seqs = np.random.SeedSequence(seed).spawn(len(specs))
    return [(kind, index, seed, sq, cfg) for (kind, index), sq in zip(specs, seqs)]


def run_suite(seed: int = 0, cfg: SuiteConfig = SuiteConfig()) -> list[RuleRecord]:
    """Rules, negative control, worked derivative and identities.

    Each job gets its own generator spawned from ``seed``, so results do
    not depend on ``cfg.parallel``.
    """
    jobs = suite_jobs(seed, cfg)
    if cfg.parallel > 1:
        with ProcessPoolExecutor(cfg.parallel) as pool:
            chunks = list(pool.map(_run_job, jobs))
    else:
        chunks = [_run_job(job) for job in jobs]
    return [r for chunk in chunks for r in chunk]


def summarize(records: list[RuleRecord]) -> dict[str, dict]:
    """Per-rule counts, failures and the most extreme value.

    For residual checks that is the largest residual; for the naive
    product control the smallest gap; for Taylor ratios the one furthest
    from 1/8.
    """
    out: dict[str, dict] = {}
    for r in records:
        s = out.setdefault(r.rule, {"checks": 0, "failures": 0, "worst": r.residual})
        s["checks"] += 1
        s["failures"] += 0 if r.passed else 1
        if r.rule == "naive_product":
            s["worst"] = min(s["worst"], r.residual)
        elif r.rule == "taylor_ratio":
            s["worst"] = max(s["worst"], r.residual, key=lambda v: abs(v - 0.125))
        else:
            s["worst"] = max(s["worst"], r.residual)
    return out


def write_report(records: list[RuleRecord], fh) -> None:
    json.dump([r.to_json() for r in records], fh, indent=1)
    fh.write("\n")
