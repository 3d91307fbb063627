# Two identical leaky oscillators, x' = 2 - x, pulse 0.2.
# Walk through the firing map, the synchronization regions, and check that
# a direct simulation lands where the map says it will.

import numpy as np

from ifire import (analyze, build_map_closed, classify, make_catalog_model, natural_period, run,
                   sync_time, sync_window, tilde_period)

eps = 0.2
model = make_catalog_model("leaky", S=2.0, gamma=1.0, epsilon=eps)
L = build_map_closed("leaky", S=2.0, gamma=1.0, epsilon=eps)

rep = analyze(L)
print(f"eta = L(0) = {rep.eta:.10f}   (A1, A2, A3) = {rep.A1, rep.A2, rep.A3}")
print(f"fixed point v* = {rep.v_star:.11f}")
print("first few a_k:", np.round(rep.a_seq[:8], 6))
print("regions S_k:")
for k, iv in rep.partition.regions[:8]:
    print(f"  S_{k:<2d} {iv}")

T = natural_period(model.flow)
Tt = tilde_period(model.flow, rep.v_star)
print(f"\nT = {T:.6f}, T~ = {Tt:.6f}")

# pick a few starting values and compare the predicted window with simulation
for v in (0.05, 0.3, 0.47, 0.7, 0.85):
    k = classify(L, v)
    lo, hi = sync_window(k, T, Tt)
    log = run(model, [0.0, v], max_firings=100)
    ts = sync_time(log)
    print(f"v = {v:4.2f}: region S_{k:<2d} window [{lo:.3f}, {hi:.3f}]  simulated sync at t = {ts:.4f}")
