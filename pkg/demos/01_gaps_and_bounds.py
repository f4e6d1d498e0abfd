"""
Spectral gaps and Hoeffding bounds on a small chain
===================================================

A lazy birth-death walk on three states. We compute its contraction
numbers, then compare the exact mgf of a centered additive functional
with the bounds built from them.
"""
import numpy as np

from markov_hoeffding import (
    StepFunction,
    absolute_lambda,
    bound_t21,
    bound_t22,
    build_chain,
    classical_hoeffding,
    exact_mgf,
    right_lambda,
)

P = np.array([[0.5, 0.5, 0.0],
              [0.25, 0.5, 0.25],
              [0.0, 0.5, 0.5]])
chain = build_chain(P)
print("pi =", chain.pi)

lam, lam_r = absolute_lambda(chain), right_lambda(chain)
print(f"lambda = {lam:.4f}   lambda_r = {lam_r:.4f}")

###############################################################################
# f counts visits to the right end; the sum runs over 20 steps.
f = StepFunction(np.array([0.0, 0.0, 1.0]), 0.0, 1.0)
n = 20
fs = [f] * n

print(f"\n{'t':>5} {'exact':>10} {'T2.1':>10} {'T2.2':>10} {'iid':>10}")
for t in (-1.0, -0.5, 0.5, 1.0):
    ex = exact_mgf(chain, None, fs, t, center=True)
    b21 = bound_t21(lam, [f.range] * n, t).mgf_bound_at_t
    b22 = bound_t22(lam_r, f.range, n, t).mgf_bound_at_t
    iid = classical_hoeffding([f.range] * n, t).mgf_bound_at_t
    print(f"{t:5.1f} {ex:10.4f} {b21:10.4f} {b22:10.4f} {iid:10.4f}")

# the independent bound is not valid here: positive correlation pushes the
# exact mgf above it for large |t|
