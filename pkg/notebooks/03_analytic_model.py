# coding: utf-8

# # The analytic model next to the simulator
#
# With r = a_h / e_p the chance that a table entry is an attacker, the model
# tracks the expected number of attackers returned in each lookup round and
# the chance that a lookup is still failing.

# In[1]:

import numpy as np

from ipersea.analytic import (AnalyticInputs, analytic_fp_random, analytic_fp_trusted,
                              analytic_path_length, malice_sequence)

ham = AnalyticInputs(e_p=2 * 16631 / 2426, a_h=1.0)
for i, step in enumerate(malice_sequence(ham, 5), 1):
    print(i, round(step.m, 3), round(step.q, 4), f"{step.P:.2e}")
print("path length", analytic_path_length(ham))


# False-positive estimates as the attack grows.  Random friends add the
# chance of a lying friend to the trusted-friend term.

# In[2]:

ratios = np.array([0.1, 0.5, 0.8, 1.0, 1.25, 1.5])
for e_p in (13.711, 48.51):
    rows = [(analytic_fp_trusted(AnalyticInputs(e_p, a)), analytic_fp_random(AnalyticInputs(e_p, a)),
             analytic_path_length(AnalyticInputs(e_p, a)).hops) for a in ratios]
    print(f"e_p={e_p}")
    for a, (t, r, h) in zip(ratios, rows):
        print(f"  g/n={a:4.2f}  fp_trusted={t:.4f}  fp_random={r:.4f}  hops={h}")


# The estimate is steep.  Once a fifth or so of table entries are attackers,
# the per-round attacker share climbs towards one faster than the product
# shrinks, and the path length hits the cap.

# In[3]:

e_p = 10.0
for a in np.linspace(0, e_p, 11):
    pl = analytic_path_length(AnalyticInputs(e_p, a), max_iter=50)
    print(f"a_h/e_p={a / e_p:.1f}  hops={pl.hops}{' (capped)' if pl.capped else ''}")
