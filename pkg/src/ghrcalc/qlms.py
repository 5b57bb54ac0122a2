"""Quaternion least mean square (QLMS) adaptive filtering.

The filter output is ``w^T x`` (weights on the left of the regressor) and
the update is ``w <- w + (alpha / 2) e x*``, with ``e`` multiplying each
conjugated regressor entry from the left.  Product order matters
throughout: swapping it gives a different (wrong) filter.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .linalg import QVector, dot_h, dot_t
from .quaternion import Quaternion, qconj_array, qmul_array

Variant = Literal["ghr", "componentwise", "conjugate"]

DIVERGENCE_LIMIT = 1e6

_I = np.array([0.0, 1.0, 0.0, 0.0])
_J = np.array([0.0, 0.0, 1.0, 0.0])
_K = np.array([0.0, 0.0, 0.0, 1.0])


@dataclass(frozen=True)
class FilterState:
    w: QVector
    n: int = 0


@dataclass(frozen=True)
class Sample:
    x: QVector
    d: Quaternion


def _check_alpha(alpha: float) -> None:
    # alpha = 0 is allowed: it freezes the weights, which makes a handy baseline
    if alpha < 0 or not math.isfinite(alpha):
        raise ValueError("step size alpha must be a nonnegative finite number")


def filter_error(state: FilterState, sample: Sample) -> Quaternion:
    """``e = d - w^T x``."""
    return sample.d - dot_t(state.w, sample.x)


def qlms_step(state: FilterState, sample: Sample, alpha: float, absorb_half: bool = False):
    """One QLMS update; returns ``(new_state, e)``.

    With ``absorb_half`` the factor 1/2 is folded into alpha, i.e. the
    update becomes ``w + alpha e x*``.
    """
    _check_alpha(alpha)
    e = filter_error(state, sample)
    gain = alpha if absorb_half else 0.5 * alpha
    w = state.w + (e * sample.x.conj()) * gain
    return FilterState(w, state.n + 1), e


def subgradients(e: Quaternion, x: QVector) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Real-coordinate subgradients of ``|e|^2`` with respect to ``w_a .. w_d``.

    Each is an (N, 4) array; for exact arithmetic only the real column is
    nonzero.
    """
    ea = e.as_array()
    ec = qconj_array(ea)
    xs = x.data
    xc = qconj_array(xs)
    grad_a = -qmul_array(ec, xs) - qmul_array(xc, ea)
    grads = [grad_a]
    for unit in (_I, _J, _K):
        grads.append(-qmul_array(ec, qmul_array(unit, xs)) + qmul_array(xc, qmul_array(unit, ea)))
    return tuple(grads)


def qlms_componentwise_step(state: FilterState, sample: Sample, alpha: float, absorb_half: bool = False):
    """QLMS from the four real subgradients assembled as
    ``-(alpha/4) (g_a + g_b i + g_c j + g_d k)``."""
    _check_alpha(alpha)
    e = filter_error(state, sample)
    ga, gb, gc, gd = subgradients(e, sample.x)
    conj_grad = (ga + qmul_array(gb, _I) + qmul_array(gc, _J) + qmul_array(gd, _K)) / 4.0
    scale = 2.0 * alpha if absorb_half else alpha
    w = QVector(state.w.data - scale * conj_grad)
    return FilterState(w, state.n + 1), e


def qlms_conjugate_variant_step(state: FilterState, sample: Sample, alpha: float, absorb_half: bool = False):
    """Variant built on ``e = d - w^H x``: ``w <- w + alpha x e*``.

    ``absorb_half`` has no effect; there is no factor 1/2 in this rule.
    """
    _check_alpha(alpha)
    e = sample.d - dot_h(state.w, sample.x)
    w = state.w + (sample.x * e.conj()) * alpha
    return FilterState(w, state.n + 1), e


STEPS = {
    "ghr": qlms_step,
    "componentwise": qlms_componentwise_step,
    "conjugate": qlms_conjugate_variant_step,
}


@dataclass
class LearningCurve:
    weight_error: list[float] = field(default_factory=list)
    squared_error: list[float] = field(default_factory=list)
    final: FilterState | None = None
    diverged: bool = False

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "weight_error", "squared_error"])
        for n, (we, se) in enumerate(zip(self.weight_error, self.squared_error)):
            writer.writerow([n, repr(we), repr(se)])


def qlms_run(
    samples: Iterable[Sample],
    alpha: float,
    w0: QVector,
    w_true: QVector | None = None,
    variant: Variant = "ghr",
    absorb_half: bool = False,
) -> LearningCurve:
    """Stream ``samples`` through the filter and record the learning curve.

    ``weight_error[n]`` is ``||w(n+1) - w_true||`` after the n-th update
    (NaN without ground truth); ``squared_error[n]`` is ``|e(n)|^2``.  The
    run stops early once the weight error exceeds ``DIVERGENCE_LIMIT``.
    """
    step = STEPS[variant]
    state = FilterState(w0)
    curve = LearningCurve()
    for sample in samples:
        if len(sample.x) != len(w0):
            raise ValueError(f"regressor length {len(sample.x)} does not match {len(w0)} taps")
        state, e = step(state, sample, alpha, absorb_half)
        werr = (state.w - w_true).norm() if w_true is not None else float("nan")
        curve.weight_error.append(werr)
        curve.squared_error.append(e.norm2())
        if not math.isfinite(state.w.norm()) or (w_true is not None and werr > DIVERGENCE_LIMIT):
            curve.diverged = True
            break
    curve.final = state
    return curve


# synthetic system identification


def quaternion_white_noise(rng: np.random.Generator, size: int, sigma: float = 1.0) -> np.ndarray:
    """``size`` quaternions with independent N(0, sigma^2) components."""
    return sigma * rng.standard_normal((size, 4))


def random_unit_weights(rng: np.random.Generator, n: int) -> QVector:
    raw = rng.standard_normal((n, 4))
    return QVector(raw / np.linalg.norm(raw, axis=1, keepdims=True))


def system_identification_stream(
    rng: np.random.Generator,
    n_taps: int,
    n_samples: int,
    sigma: float = 0.01,
    w_true: QVector | None = None,
) -> tuple[list[Sample], QVector]:
    """Tapped-delay-line regressors of quaternion white noise and
    ``d = w_true^T x + noise``.  Returns ``(samples, w_true)``."""
    if n_taps < 1:
        raise ValueError("need at least one tap")
    if w_true is None:
        w_true = random_unit_weights(rng, n_taps)
    u = quaternion_white_noise(rng, n_samples + n_taps - 1)
    noise = quaternion_white_noise(rng, n_samples, sigma)
    samples = []
    for n in range(n_samples):
        # x(n) = (u(n), u(n-1), ..., u(n-N+1))
        x = QVector(u[n : n + n_taps][::-1])
        d = dot_t(w_true, x) + Quaternion.from_array(noise[n])
        samples.append(Sample(x, d))
    return samples, w_true


def write_stream_csv(samples: Sequence[Sample], fh) -> None:
    """Columns ``n, x1a..x1d, ..., xNa..xNd, da..dd``."""
    n_taps = len(samples[0].x) if samples else 0
    writer = csv.writer(fh, lineterminator="\n")
    header = ["n"]
    for t in range(1, n_taps + 1):
        header += [f"x{t}{c}" for c in "abcd"]
    header += [f"d{c}" for c in "abcd"]
    writer.writerow(header)
    for n, s in enumerate(samples):
        writer.writerow([n] + [repr(float(v)) for v in s.x.data.reshape(-1)] + [repr(v) for v in s.d])


def read_stream_csv(fh) -> list[Sample]:
    reader = csv.reader(fh)
    header = next(reader)
    width = len(header) - 5
    if header[0] != "n" or width < 4 or width % 4 or header[-4:] != ["da", "db", "dc", "dd"]:
        raise ValueError(f"unexpected signal-stream header {header}")
    samples = []
    for row in reader:
        if not row:
            continue
        vals = np.array([float(v) for v in row[1:]])
        samples.append(Sample(QVector(vals[:width].reshape(-1, 4)), Quaternion.from_array(vals[width:])))
    return samples
