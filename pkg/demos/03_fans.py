"""Lelek fan legs, endpoint approximation and SVG pictures of both fans.

Run: python demos/03_fans.py  (writes lelek.svg and cantor.svg in the working directory)
"""

from mahavier_lab import builtin_relation
from mahavier_lab.fan_geometry import (
    cantor_quotient_embed,
    endpoint_density_probe,
    lelek_approximation,
    render_fan,
)
from mahavier_lab.space_relation import NCPair, is_never_connect

pair = NCPair("1/2", "3")
print("(1/2, 3) never-connect:", is_never_connect("1/2", "3"))
print("(1/2, 4) never-connect:", is_never_connect("1/2", "4"))

fan = lelek_approximation(pair, depth=8)
print(f"lelek depth 8: {len(fan.legs)} legs; shortest t_max {min(t for _, t in fan.legs)}")
render_fan(fan, "lelek.svg")

rep = endpoint_density_probe(pair, depth=8, eps=0.05, trials=100)
print(f"endpoint probe: {rep.successes}/{rep.trials}, min sup {rep.min_sup:.4f}")

cfan = cantor_quotient_embed(builtin_relation("robinson_3"), (0, 2, 4), depth=4)
print(f"cantor quotient of robinson_3 at depth 4: {len(cfan.legs)} legs")
render_fan(cfan, "cantor.svg")
