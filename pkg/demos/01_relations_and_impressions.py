"""Closed relations on interval unions, forward impressions and the density certificate.

Run: python demos/01_relations_and_impressions.py
"""

import numpy as np

from mahavier_lab import builtin_relation, forward_impression, transitivity_certificate
from mahavier_lab.chaos_diagnostics import non_transitivity_witness

D = builtin_relation("devaney_5")
K = builtin_relation("knudsen_3")

# one step of the five-interval system from a point of [0,1]
print("image of 0.5:", D.image(0.5))
print("preimage of 2.25:", D.preimage(2.25))

# the forward impression fills every interval up to a small gap
imp = np.asarray(forward_impression(D, 0.37, depth=24))
print(f"depth-24 impression of 0.37: {len(imp)} points")
for lo, hi in D.space.intervals:
    pts = imp[(imp >= lo) & (imp <= hi)]
    print(f"  [{lo:g},{hi:g}]: {len(pts):5d} points, widest gap {np.max(np.diff(pts)):.4f}")

rep = transitivity_certificate(D, samples=20, depth=24)
print("certificate:", "PASS" if rep.passed else "FAIL", f"worst delta {rep.worst_delta:.4f}")

# the square-root system keeps integers on the grid: no density
print("impression of 2.0 under knudsen_3:", forward_impression(K, 2.0))
print("gap witness from 0.5:", non_transitivity_witness(K, 0.5))
