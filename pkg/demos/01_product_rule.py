"""Why quaternion calculus needs a twisted product rule.

For f(q) = q and g(q) = q* the ordinary product rule predicts the wrong
derivative of f g = |q|^2.  The GHR rule rotates g's contribution and
recovers the true value.
"""

import numpy as np

from ghrcalc import fields
from ghrcalc.ghr import d
from ghrcalc.linalg import QVector
from ghrcalc.quaternion import Quaternion

f, g = fields.identity_field(), fields.conjugate_field()
x = Quaternion(0.4, 0.9, -0.3, 0.6)
q = QVector([x.as_array()])

true = d(fields.modulus_squared_field(), q)
naive = d(f, q) * g(q) + f(q) * d(g, q)
print(f"q                     = {x}")
print(f"d|q|^2/dq  (numeric)  = {true}")
print(f"closed form  q*/2     = {x.conj() * 0.5}")
print(f"ordinary product rule = {naive}")
print(f"gap |naive - true|    = {(naive - true).norm():.4f}  (equals |Im q| = {np.linalg.norm(x.as_array()[1:]):.4f})")

# GHR product rule: d(fg)/dq = f dg/dq + df/dq^{g} g, with q^{g} the rotation by g(q)
gq = g(q)
ghr_rule = f(q) * d(g, q) + d(f, q, gq) * gq
print(f"GHR product rule      = {ghr_rule}")
print(f"residual              = {(ghr_rule - true).norm():.2e}")
