"""
Quantiles of the self-normalised pivot
======================================

The test compares ``T`` with ``Delta + q V`` where ``q`` is an upper quantile
of a ratio of Brownian functionals.  Its law depends only on how many atoms
``K`` the self-normaliser averages over, so one table serves every data set.
"""

import numpy as np

from relcpd import quantile_table

# 100k draws per K take a few seconds each; repeated calls hit a memo
for K in (10, 20):
    t = quantile_table("G", K, levels=(0.9, 0.95, 0.975), reps=100_000, seed=0)
    print(f"K={K:2d}", "  ".join(f"q[{lv}]={q:7.3f}" for lv, q in zip(t.levels, t.quantiles)))

# the pivot is heavy tailed, which is why few atoms give wide intervals
t = quantile_table("G", 20, reps=100_000, seed=0)
print("upper tail ratio q[0.995] / q[0.95] =", round(t.quantile(0.995) / t.quantile(0.95), 2))

# tables can be kept on disk and read back bit for bit
t.to_csv("G_K20.csv")
print(open("G_K20.csv").read().splitlines()[:3])
assert np.array_equal(type(t).from_csv("G_K20.csv").quantiles, t.quantiles)
