"""Built-in corpus of test fields.

``rule_corpus`` holds quaternion-valued fields on H^1 (polynomials and two
rational maps) for checking the calculus rules.  ``real_corpus(n)`` holds
real-valued fields on H^N for the gradient and Hessian identities; their
coefficients are drawn from a fixed seed so every run sees the same
fields.  Coefficients are kept O(1) so that finite-difference Hessians
stay accurate to about 1e-8 on points of modulus up to 2.
"""

from __future__ import annotations

import numpy as np

from .ghr import ScalarField
from .linalg import QMatrix, QVector, dot_h, dot_t, matvec
from .quaternion import I, ONE, Quaternion, rotate

_A = Quaternion(0.5, -0.3, 0.8, 0.1)
_B = Quaternion(-0.2, 0.7, 0.4, -0.6)
_C = Quaternion(0.3, 0.1, -0.5, 0.9)
_POLE = Quaternion(2.0, -1.5, 1.0, 1.5)  # |_POLE| > 3, far from sample points


def _scalar(name, fn, real_valued=False):
    return ScalarField(lambda x: fn(x[0]), 1, name, real_valued)


def identity_field() -> ScalarField:
    return _scalar("q", lambda q: q)


def conjugate_field() -> ScalarField:
    return _scalar("q*", lambda q: q.conj())


def modulus_squared_field() -> ScalarField:
    return _scalar("|q|^2", lambda q: q.norm2(), real_valued=True)


def rule_corpus() -> list[ScalarField]:
    return [
        identity_field(),
        conjugate_field(),
        _scalar("q^2", lambda q: q * q),
        _scalar("q^3", lambda q: q * q * q),
        _scalar("a q b + c", lambda q: _A * q * _B + _C),
        _scalar("q a q*", lambda q: q * _A * q.conj()),
        _scalar("q^-1", lambda q: q.inverse()),
        _scalar("(q + p)^-1 b", lambda q: (q + _POLE).inverse() * _B),
        _scalar("|q|^2 q", lambda q: q * q.norm2()),
        _scalar("q q^i", lambda q: q * rotate(q, I)),
        _scalar("1 + q + q^2/2 + q^3/6", lambda q: ONE + q + (q * q) * 0.5 + (q * q * q) * (1.0 / 6.0)),
        _scalar("a q* q^2 + b", lambda q: _A * q.conj() * q * q + _B),
        modulus_squared_field(),
        _scalar("Re(a q^2)", lambda q: (_A * q * q).a, real_valued=True),
    ]


def rule_pairs(corpus: list[ScalarField] | None = None) -> list[tuple[ScalarField, ScalarField]]:
    """``(f, g)`` pairs for the product and chain rules, each field used as f once."""
    corpus = corpus or rule_corpus()
    n = len(corpus)
    return [(corpus[k], corpus[(k + 3) % n]) for k in range(n)]


def _coefficients(n: int, seed: int):
    rng = np.random.default_rng(seed + 1000 * n)
    scale = 0.5 / np.sqrt(n)
    A = QMatrix(scale * rng.standard_normal((n + 1, n, 4)))
    b = QVector(0.5 * rng.standard_normal((n + 1, 4)))
    B = QMatrix(scale * rng.standard_normal((n, n, 4)))
    c = QVector(0.5 * rng.standard_normal((n, 4)))
    return A, b, B, c


def real_corpus(n: int, seed: int = 0) -> list[ScalarField]:
    """Real-valued fields on H^N: two quadratics, two cubics, two quartics."""
    A, b, B, c = _coefficients(n, seed)

    def qls(q):
        return (b - matvec(A, q)).norm2()

    def herm_quad(q):
        # Re(q^H B q) + |q|^2, a quadratic with non-Hermitian B
        return dot_h(q, matvec(B, q)).a + q.norm2()

    def cubic(q):
        return sum((c[k] * q[k] * q[k] * q[k]).a for k in range(n)) / 3.0 + q.norm2()

    def cubic_mixed(q):
        s = dot_t(c, q)
        return (s * s * _A * s).a / 3.0 + 0.5 * (q - c).norm2()

    def quartic(q):
        return 0.25 * (q - c).norm2() ** 2 + 0.5 * q.norm2()

    def quartic_mixed(q):
        s = dot_h(c, matvec(B, q))
        return 0.25 * (s * s).norm2() + (s * _B).a + q.norm2()

    specs = [
        ("qls", qls),
        ("Re(q^H B q) + |q|^2", herm_quad),
        ("sum Re(c q^3)/3 + |q|^2", cubic),
        ("Re(s^2 a s)/3 + |q - c|^2/2", cubic_mixed),
        ("|q - c|^4/4 + |q|^2/2", quartic),
        ("|s^2|^2/4 + Re(s b) + |q|^2", quartic_mixed),
    ]
    return [ScalarField(fn, n, f"{name} [N={n}]", real_valued=True) for name, fn in specs]


def quadratic_corpus_names() -> set[str]:
    return {"qls", "Re(q^H B q) + |q|^2"}


def is_quadratic(f: ScalarField) -> bool:
    return f.name.split(" [N=")[0] in quadratic_corpus_names()


def random_quadratic(rng: np.random.Generator, n: int, shift: float) -> ScalarField:
    """``Re(q^H M q) + Re(q^H R q^i) - Re(p^H q) + shift |q|^2``.

    The ``q^i`` coupling gives nonzero cross blocks, so full and approximate
    Newton steps differ.  Small or negative ``shift`` yields indefinite
    Hessians.
    """
    M = QMatrix(rng.standard_normal((n, n, 4)) / (2 * np.sqrt(n)))
    R = QMatrix(rng.standard_normal((n, n, 4)) / (4 * np.sqrt(n)))
    p = QVector(rng.standard_normal((n, 4)))

    def fn(q):
        qi = q.rotate(I)
        return dot_h(q, matvec(M, q)).a + dot_h(q, matvec(R, qi)).a - dot_h(p, q).a + shift * q.norm2()

    return ScalarField(fn, n, f"quadratic(shift={shift:g})[N={n}]", real_valued=True)


def random_pd_quadratic(rng: np.random.Generator, n: int) -> ScalarField:
    """A :func:`random_quadratic` whose ``|q|^2`` term dominates the rest."""
    return random_quadratic(rng, n, 3.0)
