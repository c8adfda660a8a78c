"""
Sum-rate against the number of forward-backward iterations in a two-cell
network with two users per cell, next to the pilot overhead each iteration
costs.

Usage: python demos/03_convergence.py [trials]
"""

import sys

from maxdlt import aggregate, load_spec, run_experiment

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20
spec = load_spec("two_cell").replace(trials=trials,
                                 algorithms=("max-dlt", "max-sinr", "mmse", "wmmse", "uncoordinated"))
rows = aggregate(run_experiment(spec), spec)

by_alg = {}
for r in rows:
    by_alg.setdefault(r.algorithm, []).append(r)

shown = (0, 1, 2, 3, 5, 10, 20)
print(f"ergodic sum-rate [bit/s/Hz] at T = {shown}, {trials} trials\n")
for alg, rs in sorted(by_alg.items()):
    rate = {r.axis_value: r.mean_sum_rate_bits for r in rs}
    print(f"{alg:14s}" + "".join(f"{rate[t]:7.2f}" for t in shown)
          + f"   T=2 reaches {rate[2] / rate[20]:.0%} of T=20")

# Overhead in channel uses after T = 20: max-SINR, MMSE and max-DLT send d
# pilots per user and direction; WMMSE also feeds back its weight matrices.
print("\npilot overhead after 20 iterations [c.u.]:")
for alg, rs in sorted(by_alg.items()):
    print(f"  {alg:14s}{rs[-1].overhead_cu:6d}")
