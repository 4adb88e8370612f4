"""
Searching for release candidates
================================

A random instance at the scale of 10 stakeholders and 40 features. The
genetic search returns a set of trade-offs between value and cost; on small
instances it can be checked against full enumeration.
"""

import time

from nextrelease.monrp import SearchParams, brute_force_front, hypervolume, nsga2_search, random_instance

inst = random_instance(10, 40, seed=42)
t0 = time.perf_counter()
front = nsga2_search(inst, SearchParams(seed=42))
print(f"{len(front)} candidates in {time.perf_counter() - t0:.2f} s")
for c in front.candidates[::10]:
    print(f"  value {c.value_total:8.3f}  cost {c.cost_total:6.1f}  {c.bits}")

small = random_instance(5, 12, seed=7)
exact = brute_force_front(small)
meta = nsga2_search(small, SearchParams(seed=7))
print("same objective pairs as enumeration:", meta.objective_pairs() == exact.objective_pairs())
print("hypervolume ratio:", hypervolume(meta, small) / hypervolume(exact, small))

# Plot with e.g. gnuplot: plot "front-plot.csv" using 1:2
