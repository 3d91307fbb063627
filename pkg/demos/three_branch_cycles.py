# The three-branch flow (slope 3 / 2 / 3 on thirds of [0, 1]) at eps = 0.1.
# Its firing map is L(v) = 0.9 - v on the middle branch, so a whole band of
# starting values is 2-periodic and never synchronizes.  The backward orbit
# a_k does not stop at the band: it converges to an outer, repelling 2-cycle.

import numpy as np

from ifire import build_map_closed, classify, make_catalog_model, periodic_points, run, detect_period

eps = 0.1
L = build_map_closed("piecewise_linear", epsilon=eps)
p2 = L.period2
print(f"fixed point v*         = {L.fixed_point:.10f}")
print(f"a-sequence limits      = ({p2.v_star2:.8f}, {p2.v_hat:.8f})")

for lo, hi in periodic_points(L):
    kind = "band" if hi - lo > 1e-6 else "point"
    print(f"period-2 {kind:5s} [{lo:.8f}, {hi:.8f}]")

# sample the unit interval and tally which values synchronize
vs = np.linspace(0.0, 1.0, 2001)
ks = [classify(L, v) for v in vs]
never = vs[[k is None for k in ks]]
print(f"\nnon-synchronizing samples span [{never.min():.4f}, {never.max():.4f}]")

# a start inside the band keeps alternating forever
model = make_catalog_model("piecewise_linear", epsilon=eps)
log = run(model, [0.0, 0.4], max_firings=40)
print("co-fired:", log.co_fired(), " detected period:", detect_period(log))
print("alternating companion values:", [round(float(e.pre_state[1 - e.firers[0]]), 6) for e in log[-4:]])
