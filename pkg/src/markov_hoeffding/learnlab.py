"""Statistical-learning reproductions with Markov-dependent samples.

Least squares and the lasso restricted-eigenvalue check with a Markov design,
thresholded sparse covariance, the random-walk prevalence estimator on a graph,
and the c-UCB bandit with Markovian arms. Every experiment is a pure function
of its inputs and an integer seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .bounds import StepFunction, alpha
from .chain import FiniteChain, build_chain, leon_perron_kernel, right_lambda
from .errors import (
    BracketEmpty,
    CTooSmall,
    Disconnected,
    MarkovBoundError,
    ModelViolation,
    PerturbationTooLarge,
    SampleTooSmall,
    SingularSigma,
)
from .sim import philox, sample_path

NOISE_STREAM = 0x6E6F6973
CENTER_TOL = 1e-12
ZERO_TOL = 1e-12


# ---------------------------------------------------------------- features

@dataclass(frozen=True)
class FeatureMap:
    """Bounded features f_1..f_d on the states of a chain, each with sup-norm <= 1."""

    columns: tuple[StepFunction, ...]
    centered: bool = False

    def __post_init__(self):
        cols = tuple(c if isinstance(c, StepFunction) else StepFunction(np.asarray(c, float), -1.0, 1.0)
                     for c in self.columns)
        if not cols:
            raise MarkovBoundError("a feature map needs at least one column")
        size = cols[0].values.size
        for j, c in enumerate(cols):
            if c.values.size != size:
                raise MarkovBoundError("all feature columns must live on the same state space")
            if np.max(np.abs(c.values)) > 1.0 + 1e-12:
                raise MarkovBoundError(f"feature {j} leaves [-1, 1]")
        object.__setattr__(self, "columns", cols)

    @property
    def d_feat(self) -> int:
        return len(self.columns)

    @property
    def matrix(self) -> np.ndarray:
        """(states, d_feat) array; row x is f(x)."""
        return np.column_stack([c.values for c in self.columns])

    def sigma(self, pi) -> np.ndarray:
        """Exact second-moment matrix [pi(f_j f_k)]."""
        F = self.matrix
        return (F * np.asarray(pi, float)[:, None]).T @ F

    def check_centered(self, pi) -> None:
        means = np.asarray(pi, float) @ self.matrix
        if np.max(np.abs(means)) > CENTER_TOL:
            raise ModelViolation(f"features are not pi-centred (max |pi(f_j)| = {np.max(np.abs(means)):.3g})")


def _to_unit_box(v: np.ndarray) -> np.ndarray:
    top = np.max(np.abs(v))
    return v / top if top > 0 else v


def dictionary_features(pi, d_feat: int, seed: int, centered: bool = False) -> FeatureMap:
    """Seeded Gaussian dictionary, each column rescaled into [-1, 1].

    With ``centered=True`` the pi-mean of each column is subtracted before the
    rescaling, so pi(f_j) = 0 holds to rounding.
    """
    pi = np.asarray(pi, float)
    G = philox(seed).standard_normal((pi.size, d_feat))
    cols = []
    for j in range(d_feat):
        v = G[:, j]
        if centered:
            v = v - float(pi @ v)
        cols.append(StepFunction(_to_unit_box(v), -1.0, 1.0))
    return FeatureMap(tuple(cols), centered)


def block_sparse_features(pi, n_blocks: int, per_block: int, seed: int) -> FeatureMap:
    """Centred features whose second-moment matrix is block diagonal.

    The states are split into ``n_blocks`` contiguous groups. Every feature of
    block b vanishes off group b and has zero pi-mean on it, so features from
    different blocks are uncorrelated and each row of Sigma has at most
    ``per_block`` non-zeros.
    """
    pi = np.asarray(pi, float)
    groups = np.array_split(np.arange(pi.size), n_blocks)
    if any(g.size < 2 for g in groups):
        raise MarkovBoundError("each block needs at least two states")
    rng = philox(seed)
    cols = []
    for g in groups:
        w = pi[g] / pi[g].sum()
        for _ in range(per_block):
            v = np.zeros(pi.size)
            raw = rng.standard_normal(g.size)
            v[g] = raw - float(w @ raw)
            cols.append(StepFunction(_to_unit_box(v), -1.0, 1.0))
    return FeatureMap(tuple(cols), True)


def _inv_norm(S: np.ndarray) -> float:
    """|||S^{-1}||| for symmetric positive definite S."""
    ev = np.linalg.eigvalsh(0.5 * (S + S.T))
    if ev[0] <= ZERO_TOL * max(1.0, abs(ev[-1])):
        raise SingularSigma(f"second-moment matrix is singular (smallest eigenvalue {ev[0]:.3g})")
    return float(1.0 / ev[0])


def _alpha_r(chain: FiniteChain) -> float:
    return alpha(max(right_lambda(chain), 0.0))


def _design(chain: FiniteChain, fmap: FeatureMap, n: int, seed: int) -> np.ndarray:
    path = sample_path(chain, None, n, seed).states
    return fmap.matrix[path]


def epsilon_n(Sigma_hat, Sigma) -> float:
    """Largest entry of |Sigma_hat - Sigma|."""
    return float(np.max(np.abs(np.asarray(Sigma_hat) - np.asarray(Sigma))))


# ---------------------------------------------------------------- lemmas

def epsilon_n_tail(lam_r: float, d_feat: int, n: int, eps: float) -> float:
    """Union bound 2 d^2 exp(-n eps^2 / (2 alpha)) on P(epsilon_n >= eps)."""
    a = alpha(max(lam_r, 0.0))
    return 2.0 * d_feat**2 * math.exp(-n * eps * eps / (2.0 * a))


def epsilon_n_level(lam_r: float, d_feat: int, n: int, delta: float) -> float:
    """The eps at which :func:`epsilon_n_tail` equals delta."""
    a = alpha(max(lam_r, 0.0))
    return math.sqrt(2.0 * a * math.log(2.0 * d_feat**2 / delta) / n)


def inverse_perturbation_bound(S1, S2) -> float:
    """Upper bound on |||S1^{-1} - S2^{-1}||| from |||S1^{-1}||| and |||S1 - S2|||."""
    S1 = np.asarray(S1, float)
    S2 = np.asarray(S2, float)
    inv = float(np.linalg.norm(np.linalg.inv(S1), 2))
    gap = float(np.linalg.norm(S1 - S2, 2))
    if inv * gap >= 1.0:
        raise PerturbationTooLarge(f"|||S1^-1||| |||S1 - S2||| = {inv * gap:.4g} >= 1")
    return inv * inv * gap / (1.0 - inv * gap)


# ---------------------------------------------------------------- least squares

class OlsResult(NamedTuple):
    err: float
    bound: float
    n_min: int


def ols_n_min(chain: FiniteChain, fmap: FeatureMap, delta: float, eta: float = 0.5) -> int:
    """Smallest n with P(|||Sigma^-1||| |||Sigma_hat - Sigma||| >= 1 - eta) <= 2 delta.

    At eta = 1/2 this is 8 alpha d^2 |||Sigma^-1|||^2 (log(1/delta) + 2 log d).
    """
    d = fmap.d_feat
    inv = _inv_norm(fmap.sigma(chain.pi))
    core = _alpha_r(chain) * d * d * inv * inv * (math.log(1.0 / delta) + 2.0 * math.log(d))
    return math.ceil(2.0 * core / (1.0 - eta) ** 2)


def ols_bound(sigma: float, inv_norm: float, d: int, n: int, delta: float, eta: float = 0.5) -> float:
    """sigma |||Sigma^-1||| sqrt(2 d (log(1/delta) + log d) / n) / eta."""
    return sigma * inv_norm * math.sqrt(2.0 * d * (math.log(1.0 / delta) + math.log(d)) / n) / eta


def ols_experiment(chain: FiniteChain, fmap: FeatureMap, beta_star, sigma: float, n: int,
                   delta: float, seed: int, eta: float = 0.5) -> OlsResult:
    """One least-squares fit on a stationary Markov design with Gaussian noise.

    The bound holds with probability at least 1 - 4 delta once n >= n_min.
    """
    if not 0.0 < delta < 1.0:
        raise MarkovBoundError("delta must lie in (0, 1)")
    if not 0.0 < eta < 1.0:
        raise MarkovBoundError("eta must lie in (0, 1)")
    beta_star = np.asarray(beta_star, float)
    if beta_star.shape != (fmap.d_feat,):
        raise MarkovBoundError("beta_star must have one entry per feature")
    inv = _inv_norm(fmap.sigma(chain.pi))
    n_min = ols_n_min(chain, fmap, delta, eta)
    if n < n_min:
        raise SampleTooSmall(f"n = {n} is below the required {n_min}")
    F = _design(chain, fmap, n, seed)
    noise = sigma * philox(seed, NOISE_STREAM).standard_normal(n)
    y = F @ beta_star + noise
    S_hat = F.T @ F / n
    try:
        beta_hat = np.linalg.solve(S_hat, F.T @ y / n)
    except np.linalg.LinAlgError as exc:
        raise SingularSigma("empirical second-moment matrix is singular") from exc
    err = float(np.linalg.norm(beta_hat - beta_star))
    return OlsResult(err, ols_bound(sigma, inv, fmap.d_feat, n, delta, eta), n_min)


# ---------------------------------------------------------------- lasso

class LassoCheck(NamedTuple):
    kappa: float
    feasible: bool


def lasso_re_check(chain: FiniteChain, fmap: FeatureMap, s: int, delta: float, n: int,
                   lam_r: float | None = None) -> LassoCheck:
    """Restricted-eigenvalue constant kappa and whether it is guaranteed positive.

    ``lam_r`` defaults to the chain's own right lambda. No lasso is solved.
    """
    inv = _inv_norm(fmap.sigma(chain.pi))
    lr = right_lambda(chain) if lam_r is None else lam_r
    a = alpha(max(lr, 0.0))
    dev = 16.0 * s * math.sqrt(2.0 * (2.0 + delta) * a * math.log(fmap.d_feat) / n)
    return LassoCheck(1.0 / inv - dev, bool(inv * dev < 1.0))


# ---------------------------------------------------------------- covariance

class CovResult(NamedTuple):
    err_1norm: float
    err_spectral: float
    bound: float
    t: float


def threshold_cov(Sigma_hat, t: float) -> np.ndarray:
    """Keep entries with |entry| > t, zero the rest."""
    if t < 0:
        raise MarkovBoundError("threshold must be non-negative")
    M = np.asarray(Sigma_hat, float)
    return np.where(np.abs(M) > t, M, 0.0)


def matrix_1norm(M) -> float:
    """Largest absolute column sum."""
    return float(np.max(np.sum(np.abs(np.asarray(M)), axis=0)))


def check_sparse_class(Sigma, s: int, m: float) -> None:
    """Raise ModelViolation unless Sigma is PSD, diag <= m, and rows have <= s non-zeros."""
    Sigma = np.asarray(Sigma, float)
    scale = max(1.0, float(np.max(np.abs(Sigma))))
    if np.linalg.eigvalsh(0.5 * (Sigma + Sigma.T))[0] < -1e-12 * scale:
        raise ModelViolation("Sigma is not positive semi-definite")
    if np.max(np.diag(Sigma)) > m + 1e-12:
        raise ModelViolation(f"diagonal exceeds m = {m}")
    nnz = np.sum(np.abs(Sigma) > ZERO_TOL * scale, axis=1)
    if np.max(nnz) > s:
        raise ModelViolation(f"a row has {int(np.max(nnz))} non-zeros, more than s = {s}")


def cov_deviation(alpha_r: float, d: int, n: int, delta: float) -> float:
    """sqrt(2 (2 + delta) alpha log d / n), the level epsilon_n stays under w.p. 1 - 2 d^-delta."""
    return math.sqrt(2.0 * (2.0 + delta) * alpha_r * math.log(d) / n)


def sparse_cov_experiment(chain: FiniteChain, fmap: FeatureMap, s: int, m: float, delta: float,
                          n: int, seed: int, t: float | None = None) -> CovResult:
    """Threshold the empirical covariance of a Markov sample and measure the error.

    The threshold defaults to the smallest admissible value, twice the
    deviation level. A caller-supplied ``t`` below that raises BracketEmpty.
    """
    fmap.check_centered(chain.pi)
    Sigma = fmap.sigma(chain.pi)
    check_sparse_class(Sigma, s, m)
    dev = cov_deviation(_alpha_r(chain), fmap.d_feat, n, delta)
    t_low = 2.0 * dev
    if t is None:
        t = t_low
    elif t < t_low:
        raise BracketEmpty(f"threshold {t:.4g} is below the admissible minimum {t_low:.4g}")
    F = _design(chain, fmap, n, seed)
    E = threshold_cov(F.T @ F / n, t) - Sigma
    return CovResult(matrix_1norm(E), float(np.linalg.norm(E, 2)), s * (2.0 * t + 3.0 * dev), t)


# ---------------------------------------------------------------- graphs / RDS

class RdsResult(NamedTuple):
    prevalence_hat: float
    truth: float
    tail_at_eps: float | None
    vacuous: bool
    naive_mean: float
    lam_r: float
    avg_deviation: float   # larger of the two averages' distances from their limits


def graph_from_edges(edges: Sequence[tuple[int, int]], n_nodes: int | None = None) -> np.ndarray:
    """Symmetric 0/1 adjacency matrix from an undirected edge list (self-loops ignored)."""
    edges = [(int(u), int(v)) for u, v in edges]
    if n_nodes is None:
        n_nodes = 1 + max((max(u, v) for u, v in edges), default=-1)
    A = np.zeros((n_nodes, n_nodes))
    for u, v in edges:
        if u == v:
            continue
        A[u, v] = A[v, u] = 1.0
    return A


def load_edge_list(path) -> np.ndarray:
    """Read ``u v`` pairs (0-based, one per line, ``#`` comments allowed)."""
    edges = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) < 2:
            raise MarkovBoundError(f"bad edge line: {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return graph_from_edges(edges)


def random_walk_chain(adjacency) -> FiniteChain:
    """Simple random walk; raises Disconnected for isolated nodes or several components."""
    A = np.asarray(adjacency, float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise MarkovBoundError("adjacency must be square")
    if not np.allclose(A, A.T):
        raise MarkovBoundError("graph must be undirected (symmetric adjacency)")
    deg = A.sum(axis=1)
    if np.any(deg <= 0):
        raise Disconnected("graph has isolated nodes")
    k, _ = connected_components(A > 0, directed=False)
    if k > 1:
        raise Disconnected(f"graph has {k} connected components")
    return build_chain(A / deg[:, None])


def rds_ratio(states, f, degrees) -> float:
    """sum f(X_i)/d(X_i) divided by sum 1/d(X_i)."""
    states = np.asarray(states)
    w = 1.0 / np.asarray(degrees, float)[states]
    return float(np.sum(np.asarray(f, float)[states] * w) / np.sum(w))


def rds_tail(lam_r: float, n: int, eps: float) -> float:
    """2 exp(-2 n eps^2 / alpha) for each of the two averages of the ratio."""
    return 2.0 * math.exp(-2.0 * n * eps * eps / alpha(max(lam_r, 0.0)))


def rds_estimate(graph, infected, n: int, seed: int, eps: float | None = None) -> RdsResult:
    """Degree-weighted prevalence estimate from a stationary random walk of length n."""
    A = np.asarray(graph, float)
    chain = random_walk_chain(A)
    f = np.asarray(infected, float)
    if f.shape != (chain.d,):
        raise MarkovBoundError("need one infection indicator per node")
    deg = A.sum(axis=1)
    states = sample_path(chain, None, n, seed).states
    lr = right_lambda(chain)
    tail = None if eps is None else rds_tail(lr, n, eps)
    two_e = A.sum()
    w = 1.0 / deg[states]
    dev = max(abs(float(np.mean(f[states] * w)) - float(f.sum()) / two_e),
              abs(float(np.mean(w)) - chain.d / two_e))
    return RdsResult(
        prevalence_hat=rds_ratio(states, f, deg),
        truth=float(f.mean()),
        tail_at_eps=tail,
        vacuous=tail is not None and tail > 1.0,
        naive_mean=float(f[states].mean()),
        lam_r=lr,
        avg_deviation=dev,
    )


# ---------------------------------------------------------------- bandits

@dataclass(frozen=True)
class BanditArm:
    chain: FiniteChain
    reward: StepFunction
    lam_r: float = field(default=None)

    def __post_init__(self):
        r = self.reward if isinstance(self.reward, StepFunction) else StepFunction(np.asarray(self.reward, float), 0.0, 1.0)
        if r.values.size != self.chain.d:
            raise MarkovBoundError("reward needs one value per state")
        if r.values.min() < 0.0 or r.values.max() > 1.0:
            raise MarkovBoundError("rewards must lie in [0, 1]")
        object.__setattr__(self, "reward", r)
        if self.lam_r is None:
            object.__setattr__(self, "lam_r", right_lambda(self.chain))

    @property
    def mean(self) -> float:
        return self.chain.expect(self.reward.values)


@dataclass(frozen=True)
class RegretTrace:
    pulls: np.ndarray          # (K,) final counts N_j(T)
    choices: np.ndarray        # (T,) arm chosen at each round
    gaps: np.ndarray           # (K,) Delta_j
    pseudo_regret: float
    bound: float | None

    def counts_at(self, t: int) -> np.ndarray:
        """N_j(t) for every arm."""
        return np.bincount(self.choices[:t], minlength=self.pulls.size)


def arm_gaps(arms: Sequence[BanditArm]) -> np.ndarray:
    """Delta_j = best mean - mean of arm j (non-negative)."""
    means = np.array([a.mean for a in arms])
    return means.max() - means


def ucb_bound(arms: Sequence[BanditArm], c: float, T: int) -> float:
    """Regret bound for c-UCB; alpha uses the largest right lambda over the arms."""
    a = alpha(max(max(arm.lam_r for arm in arms), 0.0))
    if c <= 2.0 * a:
        raise CTooSmall(f"c = {c} must exceed 2 alpha = {2.0 * a:.6g}")
    total = 0.0
    for g in arm_gaps(arms):
        if g > 0:
            total += 2.0 * c / g * math.log(T) + c * g / (c - 2.0 * a)
    return total


def ucb_run(arms: Sequence[BanditArm], c: float, T: int, seed: int) -> RegretTrace:
    """Play c-UCB for T rounds.

    Rounds 1..K pull each arm once; afterwards the arm maximising
    mean + sqrt(c log t / (2 N)) is pulled, ties to the lowest index. Arm j's
    chain is sampled from stream (seed, j) and only advances when pulled.
    """
    K = len(arms)
    if K < 2:
        raise MarkovBoundError("need at least two arms")
    if c <= 0:
        raise MarkovBoundError("c must be positive")
    if T < K:
        raise MarkovBoundError("horizon must allow one pull per arm")
    rewards = []
    for j, arm in enumerate(arms):
        path = sample_path(arm.chain, None, T, _arm_seed(seed, j)).states
        rewards.append(arm.reward.values[path].tolist())
    counts = [0] * K
    sums = [0.0] * K
    choices = []
    for t in range(1, T + 1):
        if t <= K:
            j = t - 1
        else:
            lt = c * math.log(t)
            best = -math.inf
            j = 0
            for i in range(K):
                v = sums[i] / counts[i] + math.sqrt(lt / (2.0 * counts[i]))
                if v > best:
                    best, j = v, i
        sums[j] += rewards[j][counts[j]]
        counts[j] += 1
        choices.append(j)
    pulls = np.array(counts, dtype=np.int64)
    gaps = arm_gaps(arms)
    try:
        bound = ucb_bound(arms, c, T)
    except CTooSmall:
        bound = None
    return RegretTrace(pulls, np.array(choices, dtype=np.int64), gaps, float(gaps @ pulls), bound)


def _arm_seed(seed: int, j: int) -> int:
    # distinct non-negative integer per (seed, arm) for the path stream
    return int(np.random.SeedSequence([seed, j]).generate_state(1, np.uint64)[0])


def lazy_two_point_arm(lam: float, mean: float) -> BanditArm:
    """Arm on {0, 1} with reward equal to the state, stay probability lam, P(1) = mean."""
    chain = leon_perron_kernel([1.0 - mean, mean], lam)
    return BanditArm(chain, StepFunction(np.array([0.0, 1.0]), 0.0, 1.0))
