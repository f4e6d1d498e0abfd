"""Exact oracles and seeded Monte Carlo for finite chains.

Randomness comes from numpy's Philox (a counter-based generator). A stream is
identified by a tuple of integers, e.g. ``(seed,)`` for a single path or
``(seed, batch)`` for a replicate batch, so results never depend on the order
in which batches are evaluated.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .bounds import StepFunction
from .chain import FiniteChain, projection
from .errors import GapExhausted, HorizonTooLarge, MarkovBoundError

BATCH = 1024
MAX_LAZY_HORIZON = 60


def philox(*key: int) -> np.random.Generator:
    """Generator for the stream named by ``key`` (non-negative integers)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    seed: int
    start: str

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "state"])
        for i, s in enumerate(self.states, start=1):
            w.writerow([i, int(s)])
        return buf.getvalue()


@dataclass(frozen=True)
class LazyGaussianConfig:
    lam: float
    n: int
    t: float

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise MarkovBoundError("lam must lie in [0, 1)")
        if self.n < 1:
            raise MarkovBoundError("horizon n must be >= 1")


def _as_values(fs) -> list[np.ndarray]:
    out = []
    for f in fs:
        out.append(f.values if isinstance(f, StepFunction) else np.asarray(f, dtype=float))
    if not out:
        raise MarkovBoundError("need at least one step function")
    return out


def _start_vector(chain: FiniteChain, start) -> np.ndarray:
    if start is None or (isinstance(start, str) and start == "stationary"):
        return np.asarray(chain.pi, dtype=float)
    v = np.asarray(start, dtype=float)
    if v.shape != (chain.d,) or np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
        raise MarkovBoundError("start must be a probability vector over the states")
    return v


def exact_log_mgf(chain: FiniteChain, start, fs, t: float, center: bool = False,
                  P: np.ndarray | None = None) -> float:
    """log E_start[exp(t * sum_i f_i(X_i))] by a log-stabilised matrix product.

    With ``center=True`` each f_i is replaced by ``f_i - pi(f_i)``. ``P`` may
    override the kernel (used for the two-state comparison chain).
    """
    vals = _as_values(fs)
    K = chain.P if P is None else P
    s = _start_vector(chain, start)
    if center:
        vals = [v - float(np.dot(chain.pi, v)) for v in vals]
    # backward recursion: v_n = e^{t f_n}, v_i = e^{t f_i} * (P v_{i+1})
    log_scale = 0.0
    v = np.exp(t * vals[-1] - np.max(t * vals[-1]))
    log_scale += float(np.max(t * vals[-1]))
    for f in reversed(vals[:-1]):
        tf = t * f
        m = float(np.max(tf))
        v = np.exp(tf - m) * (K @ v)
        top = float(v.max())
        v = v / top
        log_scale += m + math.log(top)
    return log_scale + math.log(float(np.dot(s, v)))


def exact_mgf(chain: FiniteChain, start, fs, t: float, center: bool = False) -> float:
    """E_start[exp(t * sum_i f_i(X_i))], exact up to rounding."""
    return math.exp(exact_log_mgf(chain, start, fs, t, center=center))


def _single_path(cdf: np.ndarray, init: np.ndarray, U: np.ndarray) -> np.ndarray:
    # scalar loop: far cheaper than array ops for one path
    rows = cdf.tolist()
    last = cdf.shape[1] - 1
    u = U.tolist()
    cur = min(bisect.bisect_left(init.tolist(), u[0]), last)
    out = [cur]
    for x in u[1:]:
        cur = min(bisect.bisect_left(rows[cur], x), last)
        out.append(cur)
    return np.array(out, dtype=np.intp)


def _paths(chain: FiniteChain, start: np.ndarray, n: int, m: int, rng) -> np.ndarray:
    """(m, n) state indices; row i of the uniform block drives step i of every path."""
    cdf = np.cumsum(chain.P, axis=1)
    init = np.cumsum(start)
    U = rng.random((n, m))
    if m == 1:
        return _single_path(cdf, init, U[:, 0])[None, :]
    out = np.empty((m, n), dtype=np.intp)
    out[:, 0] = np.minimum((U[0][:, None] > init[None, :]).sum(axis=1), chain.d - 1)
    for i in range(1, n):
        nxt = (U[i][:, None] > cdf[out[:, i - 1]]).sum(axis=1)
        out[:, i] = np.minimum(nxt, chain.d - 1)
    return out


def sample_path(chain: FiniteChain, start, n: int, seed: int) -> Trajectory:
    """Inverse-CDF sample of X_1..X_n; identical for identical (inputs, seed)."""
    if n < 1:
        raise MarkovBoundError("n must be >= 1")
    s = _start_vector(chain, start)
    states = _paths(chain, s, n, 1, philox(seed))[0]
    label = "stationary" if start is None or isinstance(start, str) else "measure"
    return Trajectory(states=states, seed=seed, start=label)


def sample_paths(chain: FiniteChain, start, n: int, reps: int, seed: int) -> np.ndarray:
    """``reps`` independent paths as a (reps, n) array, batched by stream (seed, batch)."""
    s = _start_vector(chain, start)
    blocks = []
    for b, lo in enumerate(range(0, reps, BATCH)):
        m = min(BATCH, reps - lo)
        blocks.append(_paths(chain, s, n, m, philox(seed, b)))
    return np.vstack(blocks)


def wilson_halfwidth(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Centre and half-width of the Wilson score interval for k successes in n."""
    ph = k / n
    den = 1.0 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return centre, half


def empirical_tail(chain: FiniteChain, start, fs, eps: float, reps: int, seed: int) -> tuple[float, float]:
    """Fraction of runs with |sum f_i(X_i) - sum pi(f_i)| > eps, and a 95% Wilson half-width."""
    if reps < 100:
        raise MarkovBoundError("reps must be >= 100")
    vals = np.vstack(_as_values(fs))
    n = vals.shape[0]
    centre = float(np.sum(vals @ chain.pi))
    s = _start_vector(chain, start)
    hits = 0
    for b, lo in enumerate(range(0, reps, BATCH)):
        m = min(BATCH, reps - lo)
        paths = _paths(chain, s, n, m, philox(seed, b))
        sums = vals[np.arange(n)[None, :], paths].sum(axis=1)
        hits += int(np.count_nonzero(np.abs(sums - centre) > eps))
    _, half = wilson_halfwidth(hits, reps)
    return hits / reps, half


def monte_carlo_mgf(chain: FiniteChain, start, fs, t: float, reps: int, seed: int) -> tuple[float, float]:
    """Sample mean of exp(t * sum f_i(X_i)) and its standard error."""
    vals = np.vstack(_as_values(fs))
    n = vals.shape[0]
    paths = sample_paths(chain, start, n, reps, seed)
    z = np.exp(t * vals[np.arange(n)[None, :], paths].sum(axis=1))
    return float(z.mean()), float(z.std(ddof=1) / math.sqrt(reps))


def asymptotic_variance(chain: FiniteChain, f) -> float:
    """lim Var(n^{-1/2} sum f(X_i)) = <f0, (2 (I - (P - Pi))^{-1} - I) f0>_pi with f0 = f - pi(f)."""
    v = f.values if isinstance(f, StepFunction) else np.asarray(f, dtype=float)
    pi = chain.pi
    f0 = v - float(np.dot(pi, v))
    A = np.eye(chain.d) - (chain.P - projection(chain))
    try:
        g = np.linalg.solve(A, f0)
    except np.linalg.LinAlgError as exc:
        raise GapExhausted("I - (P - Pi) is singular") from exc
    if not np.all(np.isfinite(g)) or np.linalg.cond(A) > 1e14:
        raise GapExhausted("I - (P - Pi) is numerically singular")
    return float(2.0 * np.dot(pi, f0 * g) - np.dot(pi, f0 * f0))


def lazy_gaussian_log_mgf(cfg: LazyGaussianConfig) -> float:
    """log E[exp(t * sum X_i)] for the lazy Gaussian chain, X_i ~ N(0, 1) marginally.

    Conditioning on the refresh times, the sum equals sum_j L_j W_j with W_j
    i.i.d. N(0, 1) and L_j the lengths of the runs between refreshes, so the
    mgf is E[exp(t^2/2 * sum_j L_j^2)]. A run of length l occurs with weight
    lam^(l-1) (times 1 - lam for every run after the first).
    """
    lam, n, t = cfg.lam, cfg.n, cfg.t
    if n > MAX_LAZY_HORIZON:
        raise HorizonTooLarge(f"horizon {n} exceeds the DP cap {MAX_LAZY_HORIZON}")
    s = 0.5 * t * t
    ell = np.arange(1, n + 1)
    log_lam = math.log(lam) if lam > 0 else -math.inf
    stay = np.zeros(n)
    stay[1:] = (ell[1:] - 1) * log_lam
    run = stay + s * ell.astype(float) ** 2
    log_refresh = math.log1p(-lam)
    # tail[k]: log-weight of completing the last k positions with fresh runs
    tail = np.full(n + 1, -math.inf)
    tail[0] = 0.0
    for k in range(1, n + 1):
        tail[k] = logsumexp(log_refresh + run[:k] + tail[k - 1 :: -1][:k])
    return float(logsumexp(run + tail[n - ell]))


def lazy_gaussian_mgf(cfg: LazyGaussianConfig) -> float:
    """Same as :func:`lazy_gaussian_log_mgf` (the value is returned on log scale)."""
    return lazy_gaussian_log_mgf(cfg)


def no_proxy_witness(lam: float, t: float, n_grid: Sequence[int]) -> list[dict]:
    """Rows (n, log_mgf, log_mgf / n, implied_alpha) for the lazy Gaussian chain.

    A variance proxy linear in n would keep log_mgf / n bounded; here it keeps
    growing. ``implied_alpha`` is the smallest alpha with
    mgf <= exp(t^2 n alpha / 2) at that n.
    """
    if lam < 0:
        raise MarkovBoundError("lam must be >= 0")
    if t == 0:
        raise MarkovBoundError("t must be non-zero")
    rows = []
    for n in sorted(int(x) for x in n_grid):
        lm = lazy_gaussian_log_mgf(LazyGaussianConfig(lam, n, t))
        rows.append({"n": n, "log_mgf": lm, "log_mgf_per_n": lm / n,
                     "implied_alpha": 2.0 * lm / (n * t * t)})
    return rows


def strictly_increasing_from(values: Sequence[float]) -> int | None:
    """Smallest index from which ``values`` is strictly increasing, or None."""
    idx = len(values) - 1
    while idx > 0 and values[idx - 1] < values[idx]:
        idx -= 1
    return idx if len(values) > 1 and idx < len(values) - 1 else None


def table_csv(rows: list[dict], header: dict | None = None) -> str:
    """CSV text with an optional JSON header block on ``#`` lines."""
    buf = io.StringIO()
    if header is not None:
        buf.write("# " + json.dumps(header, sort_keys=True, default=str) + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()

