"""Run all four methods on the five-input test model and compare them.

Prints the total-order index of each input, the number of original-model
evaluations, and the virtual wall time at a few nominal evaluation costs.

    python demos/four_methods_d5.py [seed]
"""

import sys

from sensbench import Method, RunConfig, Scenario, analytic_indices, run_method, total_time

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
exact = analytic_indices(5).total_order
print("exact total order    ", " ".join(f"{v:7.4f}" for v in exact))

results = {m: run_method(m, Scenario(5, 1.0, seed), RunConfig()) for m in Method}
for m, r in results.items():
    print(f"{m.value:8s} T =         ", " ".join(f"{v:7.4f}" for v in r.indices.total_order),
          f"  evals={r.ledger.n_model_evals:6d}  size={r.converged_sample_size}")

print("\nvirtual total time (s)")
print("t_eval     " + "".join(f"{m.value:>12s}" for m in Method))
for t in (1e-6, 1e-3, 1.0, 3600.0):
    print(f"{t:<10g} " + "".join(f"{total_time(r.ledger, t):12.4g}" for r in results.values()))
