"""
How long to run an MCMC sampler
===============================

Start a chain from a point mass, throw away a burn-in, and ask for the
number of further steps needed so the running average is within eps of
its stationary mean with probability 1 - delta.
"""
import math

import numpy as np

from markov_hoeffding import (
    MeasurePair,
    absolute_lambda,
    bound_t62,
    build_chain,
    mcmc_plan,
    right_lambda,
)

# random walk on a 6-cycle with holding probability 1/2
d = 6
P = 0.5 * np.eye(d) + 0.25 * (np.roll(np.eye(d), 1, axis=1) + np.roll(np.eye(d), -1, axis=1))
chain = build_chain(P)
lam, lam_r = absolute_lambda(chain), right_lambda(chain)
print(f"lambda = {lam:.4f}, lambda_r = {lam_r:.4f}")

nu = np.zeros(d)
nu[0] = 1.0

###############################################################################
# Larger p gives a heavier prefactor but a smaller variance proxy multiplier q.
eps, delta = 0.05, 0.01
for p in (1.5, 2.0, 4.0, math.inf):
    for n0 in (0, 10, 40):
        plan = mcmc_plan(lam, lam_r, MeasurePair(nu, chain.pi, p), n0, (0, 1), eps, delta)
        print(f"p={p:<4} n0={n0:<3} C_p={plan.c_p:8.3f}  n={plan.n_required}")

###############################################################################
# The plan is tight: one step fewer misses delta.
mp = MeasurePair(nu, chain.pi, 2.0)
plan = mcmc_plan(lam, lam_r, mp, 10, (0, 1), eps, delta)
for m in (plan.n_required - 1, plan.n_required):
    tail = bound_t62(lam, lam_r, mp, 10, (0, 1), m, eps=m * eps).tail_bound_at_eps
    print(f"n={m}: tail bound {tail:.8f}")
