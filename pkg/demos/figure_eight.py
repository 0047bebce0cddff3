"""Nonconstant f1 = 0 solutions on the figure-eight branch at omega = 0.

The branch leaving the middle constant solution crosses f1 = 0 at two shifts
of one nonconstant solution, half a period apart.  The kernel analysis of
that solution predicts those shifts as the candidates sigma0.

    python3 demos/figure_eight.py [n]
"""
import sys

import numpy as np

from llecont import Params, figure_eight

n = int(sys.argv[1]) if len(sys.argv) > 1 else 128
p = Params(d=-0.1, zeta=3.9, omega=0.0, f0=2.0, f1=0.0, k1=1)

fe = figure_eight(p, n)
print(f"closed loops: {[b.closed for b in fe.branches]}")
print(f"nonconstant crossings: {len(fe.crossings)}, smallest period index {fe.period_index}")
print(f"observed shifts:   {np.round(sorted(fe.shifts), 5).tolist()}")
rep = fe.report
print(f"sigma0 candidates: {np.round(sorted(rep.sigma0_candidates), 5).tolist()}")
lin = rep.linearization
print(f"kernel dimension {lin.kernel_dim_estimate} (simple: {lin.simple}), transversal {rep.transversal}")
print(f"further condition ok: {rep.further_cond_ok}, flags: {rep.flags}")
