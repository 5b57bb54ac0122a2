import io
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghrcalc.ghr import ScalarField
from ghrcalc.gradhess import gradient
from ghrcalc.linalg import QVector, dot_h, dot_t
from ghrcalc.qlms import (
    FilterState,
    Sample,
    filter_error,
    qlms_componentwise_step,
    qlms_conjugate_variant_step,
    qlms_run,
    qlms_step,
    read_stream_csv,
    system_identification_stream,
    write_stream_csv,
)
from ghrcalc.quaternion import I, J, ONE, Quaternion

from conftest import quaternions, qvectors

BASELINE = json.loads((Path(__file__).parents[1] / "data" / "qlms_baseline.json").read_text())


def random_sample(rng, n):
    return Sample(QVector(rng.standard_normal((n, 4))), Quaternion.from_array(rng.standard_normal(4)))


def test_ghr_step_example():
    state, e = qlms_step(FilterState(QVector.zeros(1)), Sample(QVector([I.as_array()]), ONE), 2.0)
    assert e == ONE
    assert state.w.isclose(QVector([(-I).as_array()]))
    assert state.n == 1


def test_conjugate_variant_example():
    state, e = qlms_conjugate_variant_step(FilterState(QVector.zeros(1)), Sample(QVector([J.as_array()]), ONE), 1.0)
    assert e == ONE
    assert state.w.isclose(QVector([J.as_array()]))


def test_zero_error_and_zero_input_leave_weights(rng):
    w = QVector(rng.standard_normal((3, 4)))
    x = QVector(rng.standard_normal((3, 4)))
    exact = Sample(x, dot_t(w, x))
    for step in (qlms_step, qlms_componentwise_step):
        assert step(FilterState(w), exact, 0.3)[0].w.isclose(w, atol=1e-14)
    conj_exact = Sample(x, dot_h(w, x))
    assert qlms_conjugate_variant_step(FilterState(w), conj_exact, 0.3)[0].w.isclose(w, atol=1e-14)
    silent = Sample(QVector.zeros(3), Quaternion(1.0, 2.0, 3.0, 4.0))
    for step in (qlms_step, qlms_componentwise_step):
        assert step(FilterState(w), silent, 0.3)[0].w.isclose(w, atol=0)


def test_componentwise_matches_ghr_step(rng):
    worst = 0.0
    for _ in range(1000):
        state = FilterState(QVector(rng.standard_normal((4, 4))))
        sample = random_sample(rng, 4)
        a, _ = qlms_step(state, sample, 0.05)
        b, _ = qlms_componentwise_step(state, sample, 0.05)
        worst = max(worst, np.max(np.abs(a.w.data - b.w.data)))
    assert worst < 1e-12


def test_swapped_product_order_breaks_equivalence(rng):
    state = FilterState(QVector(rng.standard_normal((3, 4))))
    sample = random_sample(rng, 3)
    e = filter_error(state, sample)
    swapped = state.w + QVector(np.stack([(x.conj() * e).as_array() for x in sample.x])) * 0.025
    reference, _ = qlms_componentwise_step(state, sample, 0.05)
    assert np.max(np.abs(swapped.data - reference.w.data)) > 1e-3
    # so does computing the filter output as sum x_n w_n instead of sum w_n x_n
    wrong_e = sample.d - sum((x * w for w, x in zip(state.w, sample.x)), Quaternion())
    assert (wrong_e - e).norm() > 1e-3


def test_real_error_scales_regressor(rng):
    state = FilterState(QVector.zeros(2))
    x = QVector(rng.standard_normal((2, 4)))
    new, e = qlms_step(state, Sample(x, Quaternion(0.7)), 0.4)
    assert e.is_real
    assert new.w.isclose(x.conj() * (0.5 * 0.4 * 0.7), atol=1e-15)


def test_real_signals_differ_by_half(rng):
    w = QVector.from_reals(rng.standard_normal(3))
    x = QVector.from_reals(rng.standard_normal(3))
    sample = Sample(x, Quaternion(float(rng.standard_normal())))
    ghr, _ = qlms_step(FilterState(w), sample, 0.2)
    conj, _ = qlms_conjugate_variant_step(FilterState(w), sample, 0.2)
    assert (conj.w - w).isclose((ghr.w - w) * 2.0, atol=1e-14)


def test_absorb_half(rng):
    state = FilterState(QVector(rng.standard_normal((2, 4))))
    sample = random_sample(rng, 2)
    a, _ = qlms_step(state, sample, 0.1, absorb_half=True)
    b, _ = qlms_step(state, sample, 0.2)
    assert a.w.isclose(b.w, atol=1e-15)
    c, _ = qlms_componentwise_step(state, sample, 0.1, absorb_half=True)
    assert a.w.isclose(c.w, atol=1e-12)


def test_engine_gradient_matches_closed_form(rng):
    for _ in range(5):
        x = QVector(rng.standard_normal((3, 4)))
        w = QVector(rng.standard_normal((3, 4)))
        d = Quaternion.from_array(rng.standard_normal(4))
        cost = ScalarField(lambda v: (d - dot_t(v, x)).norm2(), 3, "|e|^2", True)
        e = d - dot_t(w, x)
        g = gradient(cost, w)
        for n in range(3):
            assert g.grad[n].isclose(x[n] * e.conj() * -0.5, atol=1e-6)
        alpha = 0.3
        update = qlms_step(FilterState(w), Sample(x, d), alpha)[0].w - w
        assert update.isclose(g.conj_grad * -alpha, atol=1e-6)


def test_negative_alpha_rejected(rng):
    with pytest.raises(ValueError):
        qlms_step(FilterState(QVector.zeros(1)), random_sample(rng, 1), -0.1)


def test_system_identification_against_baseline():
    rng = np.random.default_rng(BASELINE["seed"])
    samples, w_true = system_identification_stream(rng, BASELINE["taps"], BASELINE["samples"], BASELINE["sigma"])
    curve = qlms_run(samples, BASELINE["alpha"], QVector.zeros(BASELINE["taps"]), w_true)
    final = curve.weight_error[-1]
    assert final < 0.05
    assert final <= BASELINE["terminal_weight_error"] * (1 + 1e-9)
    assert not curve.diverged


def test_alpha_zero_is_flat(rng):
    samples, w_true = system_identification_stream(rng, 2, 50)
    curve = qlms_run(samples, 0.0, QVector.zeros(2), w_true)
    assert len(set(curve.weight_error)) == 1


def test_large_alpha_diverges(rng):
    samples, w_true = system_identification_stream(rng, 4, 2000)
    curve = qlms_run(samples, 5.0, QVector.zeros(4), w_true)
    assert curve.diverged
    assert curve.weight_error[-1] > 1e6


def test_zero_input_stream_keeps_weights(rng):
    w0 = QVector(rng.standard_normal((2, 4)))
    samples = [Sample(QVector.zeros(2), Quaternion(1.0)) for _ in range(10)]
    assert qlms_run(samples, 0.1, w0).final.w == w0


def test_wiener_solution_is_fixed(rng):
    samples, w_true = system_identification_stream(rng, 3, 20, sigma=0.0)
    curve = qlms_run(samples, 0.1, w_true, w_true)
    assert max(curve.weight_error) < 1e-14


def test_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        qlms_run([random_sample(rng, 3)], 0.1, QVector.zeros(2))


@settings(max_examples=30)
@given(qvectors(2), qvectors(2), quaternions, st.floats(0.0, 1.0))
def test_componentwise_property(w, x, d, alpha):
    a, _ = qlms_step(FilterState(w), Sample(x, d), alpha)
    b, _ = qlms_componentwise_step(FilterState(w), Sample(x, d), alpha)
    assert np.max(np.abs(a.w.data - b.w.data)) < 1e-10


def test_stream_and_curve_csv(rng):
    samples, w_true = system_identification_stream(rng, 2, 5)
    buf = io.StringIO()
    write_stream_csv(samples, buf)
    assert buf.getvalue().splitlines()[0] == "n,x1a,x1b,x1c,x1d,x2a,x2b,x2c,x2d,da,db,dc,dd"
    buf.seek(0)
    back = read_stream_csv(buf)
    assert all(a.x == b.x and a.d == b.d for a, b in zip(samples, back))
    with pytest.raises(ValueError):
        read_stream_csv(io.StringIO("n,foo\n"))
    curve = qlms_run(samples, 0.1, QVector.zeros(2), w_true)
    out = io.StringIO()
    curve.write_csv(out)
    assert out.getvalue().splitlines()[0] == "n,weight_error,squared_error"
