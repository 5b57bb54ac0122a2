"""Identify an unknown quaternion FIR filter with QLMS."""

import numpy as np

from ghrcalc.linalg import QVector
from ghrcalc.qlms import qlms_run, system_identification_stream

rng = np.random.default_rng(0)
samples, w_true = system_identification_stream(rng, 4, 5000, sigma=0.01)
print("true taps:")
for w in w_true:
    print(f"  {w}")

# the conjugate variant adapts a filter of the form w^H x, so on data generated
# by w^T x it settles on the wrong taps
for variant in ("ghr", "componentwise", "conjugate"):
    curve = qlms_run(samples, 0.02, QVector.zeros(4), w_true, variant=variant)
    marks = [curve.weight_error[k] for k in (0, 99, 999, 4999)]
    print(f"{variant:>13}: weight error at n=1,100,1000,5000: " + ", ".join(f"{v:.2e}" for v in marks))

curve = qlms_run(samples, 0.02, QVector.zeros(4), w_true)
print("\nlearned taps:")
for w in curve.final.w:
    print(f"  {w}")
