"""A-priori bounds and the uniqueness test, checked against multistart Newton.

    python3 demos/bounds_uniqueness.py [f1]
"""
import sys

from llecont import Params, compute_bounds, uniqueness_classify
from llecont.bounds import distinct_solutions, multistart_solutions, verify_bounds

f1 = float(sys.argv[1]) if len(sys.argv) > 1 else 0.05
for p in (Params(d=-0.1, zeta=3.0, omega=1.0, f0=2.0, f1=f1, k1=1),
          Params(d=1.0, zeta=3.0, omega=1.0, f0=0.0, f1=f1, k1=1)):
    rep = compute_bounds(p)
    print(p)
    print("  " + ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in rep.as_dict().items()))
    print(f"  verdict: {uniqueness_classify(p)}")
    sols = distinct_solutions(multistart_solutions(p, 64, starts=20))
    print(f"  multistart: {len(sols)} distinct solutions, "
          f"bounds hold: {[verify_bounds(p, u, rep).passed for u in sols]}")
