"""Periodic, sensitivity and stutter-padded mixing witnesses, each re-verified.

Run: python demos/02_witnesses.py
"""

import numpy as np

from mahavier_lab import builtin_relation
from mahavier_lab.chaos_diagnostics import (
    connecting_word,
    mixing_pad,
    periodic_point_from_witness,
    periodic_witness_devaney5,
    random_cylinder,
    sensitivity_witness_robinson3,
)
from mahavier_lab.mahavier_words import Cylinder

D = builtin_relation("devaney_5")
R = builtin_relation("robinson_3")

# a loop through (x, y) closes into a periodic word
w = periodic_witness_devaney5(2.25, 0.0625)
print("periodic witness:", w.z.coords, "verified", w.verify())
print("periodic point, two blocks:", periodic_point_from_witness(w, 2).coords)

# two words sharing a cylinder that end up far apart and far from the spine
U = Cylinder(((1, 0.0, 1.0), (2, 0.0, 1.0)))
s = sensitivity_witness_robinson3(U)
print(f"sensitivity: m={s.m}, separation {s.separation:.3f}, spine distance {s.spine_distance:.3f}")

# a connecting word from U to V, then repeated stutters give every later time
rng = np.random.default_rng(1)
U, V = random_cylinder(D, rng), random_cylinder(D, rng)
cw = connecting_word(D, U, V)
cert = mixing_pad(D, cw.base, U, V, cw.m, 16)
print(f"mixing: base length {len(cw.base)}, hit time {cw.m}, "
      f"{len(cert.padded_words)} padded words verified={cert.verified}")
