"""
Unbounded functions break the variance proxy
============================================

A lazy chain with Gaussian marginals: stay put with probability lam,
otherwise draw a fresh N(0, 1). Runs of repeated values make the sum
behave like a Gaussian with variance growing faster than n, so no proxy
linear in n can bound its mgf.
"""
import math

from markov_hoeffding.sim import LazyGaussianConfig, lazy_gaussian_log_mgf, no_proxy_witness

t = 1.0
for lam in (0.3, 0.5):
    print(f"lam = {lam}")
    for row in no_proxy_witness(lam, t, [10, 20, 30, 40, 50]):
        print("  n={n:3d}  log mgf={log_mgf:9.3f}  per n={log_mgf_per_n:7.3f}  "
              "implied alpha={implied_alpha:7.3f}".format(**row))

###############################################################################
# The staying-put path alone already gives lam^n exp(t^2 n^2 / 2).
lam, n = 0.5, 30
lm = lazy_gaussian_log_mgf(LazyGaussianConfig(lam, n, t))
floor = n * math.log(lam) + 0.5 * t * t * n * n
print(f"\nlog mgf = {lm:.3f} >= n log lam + t^2 n^2 / 2 = {floor:.3f}")
