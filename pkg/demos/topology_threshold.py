"""Which constant solutions the loop through the middle one connects, and where that switches.

At f1 = 0 there are three constant solutions for zeta between the turning
points.  Continuing in f1 from the middle one returns to f1 = 0 at one of the
other two; the partner changes from the lower to the upper solution at a
threshold in zeta, which is located by bisection.

    python3 demos/topology_threshold.py [n]
"""
import sys

from llecont import ContinuationSettings, Params, locate_threshold, solve_constants
from llecont.experiments import constant_crossings, loop_partner

n = int(sys.argv[1]) if len(sys.argv) > 1 else 128
settings = ContinuationSettings(track_min_sv=False)
p = Params(d=-0.1, zeta=3.0, omega=1.0, f0=2.0, f1=0.0, k1=1)

for zeta in (3.0, 3.3):
    q = p.with_(zeta=zeta)
    label, b = loop_partner(q, n, settings)
    rhos = [round(tp.rho, 4) for tp in solve_constants(zeta, q.f0)]
    print(f"zeta={zeta}: constants rho={rhos}, loop closed={b.closed}, "
          f"meets {constant_crossings(b)} -> {label} pair, {len(b.points)} points")

res = locate_threshold(p, 3.0, 3.3, 0.01, n, settings)
print(f"threshold in [{res.lo:.5f}, {res.hi:.5f}]")
for zeta, label in res.history:
    print(f"  zeta={zeta:.5f}  {label}")
