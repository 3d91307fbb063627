# A pair that is almost, but not exactly, identical: small offsets in drive,
# leak, threshold and pulse size.  Each step of the alternating sequence
# u_0, u_1, ... drifts from the ideal map L; the perturbation bound Phi
# caps that drift step by step.

from ifire import audit_theorem, build_map_closed, FreeFlow, make_catalog_model, natural_period, tilde_period

L = build_map_closed("leaky", S=2.0, gamma=1.0, epsilon=0.2)
flow = FreeFlow.leaky(2.0, 1.0)
T, Tt = natural_period(flow), tilde_period(flow, L.fixed_point)

model = make_catalog_model("perturbed_leaky", S=2.0, gamma=1.0, epsilon=0.2,
                           a=[0.004, -0.003], b=[-0.002, 0.003], xi=[0.002, -0.001], eps_i=[0.001, -0.002])
rep = audit_theorem(model, [0.0, 0.46], L, T, Tt, method="rk")
print(f"start in S_{rep.max_k}, predicted window {tuple(round(w, 4) for w in rep.window)}, "
      f"simulated sync at {rep.sync_time:.4f}")
print(f"{'step':>4} {'u_i':>10} {'u_i+1':>10} {'L(u_i)':>10} {'|dev|':>10} {'Phi':>10}")
for s in rep.steps:
    print(f"{s.index:4d} {s.u:10.6f} {s.u_next:10.6f} {s.predicted:10.6f} {s.deviation:10.2e} {s.bound:10.2e}")
print("every step within its bound:", rep.bound_ok)
