"""Sign of the second f1-derivative of the norm along the constant-solution curve.

The constant solutions at f1 = 0 form a curve parametrized by t; each point
starts a branch in f1 whose norm bends up or down.  The sign flips where the
curvature passes through zero or through a pole.

    python3 demos/curvature_signs.py
"""
import numpy as np

from llecont import sign_changes, sign_map

f0, d, omega, k1 = 2.0, -0.1, 1.0, 1
ts = np.linspace(-0.999, 0.999, 2001)

rows = sign_map(f0, d, omega, k1, ts[::200])
for r in rows:
    print(f"t={r['t']:+.3f} zeta={r['zeta']:7.4f} rho={r['rho']:7.4f} "
          f"second derivative={r['second_deriv']:+.4e} sign={r['sign']:+d}")
print("sign changes:")
for c in sign_changes(f0, d, omega, k1, ts):
    print(f"  {c['kind']:4s} at t={c['t']:+.6f} zeta={c['zeta']:.6f}")
