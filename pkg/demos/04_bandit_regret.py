"""
UCB with Markovian rewards
==========================

Each arm's reward stream is a lazy two-point chain with mean mu and
persistence lam. The exploration constant must exceed 2 alpha; we use
c = 2 alpha + 1 and compare the observed pseudo-regret with the bound.
"""
import numpy as np

from markov_hoeffding.bounds import alpha
from markov_hoeffding.learnlab import lazy_two_point_arm, ucb_bound, ucb_run

lam = 0.5
arms = [lazy_two_point_arm(lam, 0.6), lazy_two_point_arm(lam, 0.4)]
c = 2 * alpha(lam) + 1
T = 10_000

regret = np.array([ucb_run(arms, c, T, seed=s).pseudo_regret for s in range(30)])
print(f"c = {c}, T = {T}")
print(f"mean pseudo-regret {regret.mean():.1f} +- {regret.std(ddof=1) / np.sqrt(regret.size):.1f}")
print(f"bound              {ucb_bound(arms, c, T):.1f}")

###############################################################################
# Regret grows like log T.
tr = ucb_run(arms, c, T, seed=0)
for t in (100, 1000, 10_000):
    print(f"t={t:6d} pulls of the worse arm: {tr.counts_at(t)[1]}")
