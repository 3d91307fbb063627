# x' = 1 + x^2 with eps = 0.1: L(0) = 9/11 is below 1 - eps = 0.9, so the
# map never lands in the absorbing interval [0.9, 1] and a pair of
# oscillators never fires together.

import numpy as np

from ifire import a_sequence, build_map_closed, build_map_numeric, check_conditions, FreeFlow, make_catalog_model, run

eps = 0.1
L = build_map_closed("quadratic", c=1.0, epsilon=eps)
cond = check_conditions(L)
print(f"eta = {cond.eta:.10f}  (9/11 = {9 / 11:.10f})   A2 holds: {cond.A2}")
print(f"fixed point v* = {L.fixed_point:.11f}")
print("a-sequence stops at index", a_sequence(L).stop_index, "(1 - eps lies outside the range of L)")

Ln = build_map_numeric(FreeFlow.quadratic(1.0), eps)
grid = np.linspace(0.0, 0.9, 31)
print(f"numeric vs closed map, max difference on a grid: {np.max(np.abs(Ln(grid) - L(grid))):.2e}")

model = make_catalog_model("quadratic", c=1.0, epsilon=eps)
rng = np.random.default_rng(3)
hits = sum(run(model, [0.0, v], max_firings=300).co_fired() for v in rng.uniform(0, 0.9, 25))
print(f"pairs that ever co-fired in 25 runs of 300 firings: {hits}")
