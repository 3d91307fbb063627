# One hundred slightly different leaky oscillators, pulse 0.08, random starts.
# Count clusters at a few system firings and report when everyone fires
# together.  Pass a seed on the command line to try another draw.

import sys
from pathlib import Path

import numpy as np

from ifire import replicate_ensemble_experiment

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 42
rep = replicate_ensemble_experiment(seed)
print(f"seed {seed}: {rep.events} system firings simulated")
for k in sorted(rep.cluster_counts):
    x = np.sort(rep.snapshots[k])
    print(f"  before firing {k:3d}: {rep.cluster_counts[k]:3d} clusters, spread of states {x[-1] - x[0]:.4f}")
if rep.synchronized:
    print(f"all 100 fire together from firing {rep.sync_index + 1} (t = {rep.sync_time:.4f}),"
          f" checked for {rep.checked_after_sync} more firings: persisted = {rep.persisted}")
else:
    print("no synchrony within the firing budget")

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    fig, axes = plt.subplots(1, len(rep.snapshots), figsize=(12, 3), sharey=True)
    for ax, (k, x) in zip(np.atleast_1d(axes), sorted(rep.snapshots.items())):
        ax.plot(np.sort(x), ".", ms=3)
        ax.set_title(f"before firing {k}")
    fig.tight_layout()
    out = Path("out")
    out.mkdir(exist_ok=True)
    fig.savefig(out / f"ensemble_seed{seed}.png", dpi=120)
    print(f"wrote {out / f'ensemble_seed{seed}.png'}")
