"""Eigenvalues of tilted lazy i.i.d. kernels and the two-state extremal chain.

For the kernel ``c I + (1 - c) Pi`` and a function f taking values
beta_1 > ... > beta_k with masses m_j, the eigenvalues of the tilted operator
``E^{f/2} (c I + (1 - c) Pi) E^{f/2}`` away from the poles ``c e^{beta_j}`` are
the solutions of ``F(r) = sum_j (1 - c) e^{beta_j} m_j / (r - c e^{beta_j}) = 1``.
F decreases strictly between consecutive poles, so each bracket holds exactly
one root and bisection cannot fail for representable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bounds import StepFunction, alpha
from .chain import FiniteChain, build_chain, leon_perron_coefficient
from .errors import BracketFailure, MarkovBoundError, NotLeonPerron, PoleHit
from .sim import exact_log_mgf

MERGE_TOL = 1e-12
MAX_BISECT = 200


@dataclass(frozen=True)
class SimpleFunction:
    """Distinct values ``betas`` (strictly decreasing) and their pi-masses."""

    betas: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        if b.ndim != 1 or b.shape != m.shape or b.size == 0:
            raise MarkovBoundError("betas and masses must be equal-length vectors")
        if np.any(np.diff(b) >= 0):
            raise MarkovBoundError("betas must be strictly decreasing")
        if np.any(m <= 0) or abs(m.sum() - 1.0) > 1e-12:
            raise MarkovBoundError("masses must be positive and sum to 1")
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "masses", m)

    @property
    def k(self) -> int:
        return self.betas.size

    @classmethod
    def from_values(cls, values, pi) -> "SimpleFunction":
        """Collapse a state function onto its distinct values.

        Values closer than 1e-12 are merged (masses summed).
        """
        values = np.asarray(values, dtype=float)
        pi = np.asarray(pi, dtype=float)
        order = np.argsort(-values, kind="stable")
        betas, masses = [], []
        for i in order:
            if betas and abs(betas[-1] - values[i]) <= MERGE_TOL:
                masses[-1] += pi[i]
            else:
                betas.append(values[i])
                masses.append(pi[i])
        m = np.array(masses)
        return cls(np.array(betas), m / m.sum())


class TwoStateSystem(NamedTuple):
    """Two-state chain on {a, b}: stay with probability lam, else redraw with P(b) = mu."""

    lam: float
    mu: float
    a: float
    b: float

    def validate(self) -> "TwoStateSystem":
        if not 0.0 <= self.lam < 1.0:
            raise MarkovBoundError("lam must lie in [0, 1)")
        if not 0.0 < self.mu < 1.0:
            raise MarkovBoundError("mu must lie in (0, 1)")
        if not self.a < self.b:
            raise MarkovBoundError("need a < b")
        return self

    @property
    def p(self) -> float:
        return (self.lam + (1.0 - self.lam) * self.mu) / (1.0 + self.lam)

    @property
    def mean(self) -> float:
        return (1.0 - self.mu) * self.a + self.mu * self.b


def _scaled_F(s: float, x: np.ndarray, m: np.ndarray, c: float) -> float:
    # F at r = e^{beta_1} * s, with x_j = e^{beta_j - beta_1}
    return float(np.sum((1.0 - c) * x * m / (s - c * x)))


def f_of_r(sf: SimpleFunction, c: float, r: float) -> float:
    """F(r) = sum_j (1 - c) e^{beta_j} m_j / (r - c e^{beta_j})."""
    e = np.exp(sf.betas)
    poles = c * e
    if np.any(np.abs(r - poles) <= 1e-14 * max(1.0, abs(r))):
        raise PoleHit(f"r = {r!r} sits on a pole c e^beta")
    return float(np.sum((1.0 - c) * e * sf.masses / (r - poles)))


def _bisect(x, m, c, lo, hi) -> float:
    # F(lo+) = +inf, F(hi-) < 1 (or -inf); never evaluates an endpoint
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _scaled_F(mid, x, m, c) > 1.0:
            lo = mid
        else:
            hi = mid
    cands = [v for v in (lo, hi, 0.5 * (lo + hi)) if np.all(v != c * x)]
    if not cands:
        raise BracketFailure("root collapsed onto a pole")
    return min(cands, key=lambda v: abs(_scaled_F(v, x, m, c) - 1.0))


def leon_perron_eigenvalues(sf: SimpleFunction, c: float) -> np.ndarray:
    """All non-pole eigenvalues r_1 > ... > r_k of the tilted lazy kernel.

    r_j lies in (c e^{beta_j}, c e^{beta_{j-1}}) with the top bracket open to
    +inf. At c = 0 the kernel has rank one and the single root pi(e^f) is
    returned.
    """
    if not 0.0 <= c < 1.0:
        raise MarkovBoundError("c must lie in [0, 1)")
    top = float(sf.betas[0])
    x = np.exp(sf.betas - top)
    m = sf.masses
    if c == 0.0:
        return np.array([math.exp(top) * float(np.dot(x, m))])
    roots = []
    for j in range(sf.k):
        lo = c * x[j]
        if j == 0:
            # F(1) <= 1 because every term is at most m_j there
            hi = 1.0
            if _scaled_F(hi, x, m, c) > 1.0:
                while _scaled_F(hi, x, m, c) > 1.0:
                    hi *= 2.0
                    if not math.isfinite(hi):
                        raise BracketFailure("could not bracket the top root")
            elif _scaled_F(hi, x, m, c) == 1.0:
                roots.append(hi)
                continue
        else:
            hi = c * x[j - 1]
        if not hi > lo:
            raise BracketFailure(f"bracket {j} collapsed (beta span too wide for double precision)")
        roots.append(_bisect(x, m, c, lo, hi))
    out = math.exp(top) * np.array(roots)
    return np.array([_polish(sf, c, r) for r in out])


def _polish(sf: SimpleFunction, c: float, r: float) -> float:
    # rescaling by e^{beta_1} moves the root off its best double; walk back by ulps
    best, res = r, abs(f_of_r(sf, c, r) - 1.0)
    for direction in (math.inf, -math.inf):
        y = r
        while True:
            y = math.nextafter(y, direction)
            try:
                ry = abs(f_of_r(sf, c, y) - 1.0)
            except PoleHit:
                break
            if ry >= res:
                break
            best, res = y, ry
    return best


def lp_operator_norm(sf: SimpleFunction, c: float) -> float:
    """|||E^{f/2} (c I + (1 - c) Pi) E^{f/2}|||_pi, the largest root."""
    return float(leon_perron_eigenvalues(sf, c)[0])


def dense_tilted_matrix(sf: SimpleFunction, c: float) -> np.ndarray:
    """Symmetric Euclidean matrix of the tilted lazy kernel on the k value classes."""
    e = np.exp(sf.betas)
    u = np.sqrt(e * sf.masses)
    return c * np.diag(e) + (1.0 - c) * np.outer(u, u)


def theta(ts: TwoStateSystem, t: float) -> float:
    """Largest eigenvalue of E^{ty/2} Q E^{ty/2} for the two-state chain, by the quadratic formula."""
    lam, a, b, p = ts.lam, ts.a, ts.b, ts.p
    B = (1.0 + lam) * ((1.0 - p) * math.exp(t * a) + p * math.exp(t * b))
    disc = B * B - 4.0 * lam * math.exp(t * (a + b))
    if disc < 0.0:
        assert disc >= -1e-12 * max(1.0, B * B), disc
        disc = 0.0
    return 0.5 * (B + math.sqrt(disc))


def theta_tilde(ts: TwoStateSystem, t: float) -> float:
    """exp(t * mean + t^2/2 * alpha(lam) * (b - a)^2 / 4), the sub-Gaussian envelope of theta."""
    return math.exp(t * ts.mean + 0.5 * t * t * alpha(ts.lam) * (ts.b - ts.a) ** 2 / 4.0)


def two_state_matrix(ts: TwoStateSystem) -> FiniteChain:
    ts.validate()
    mu = np.array([1.0 - ts.mu, ts.mu])
    Q = ts.lam * np.eye(2) + (1.0 - ts.lam) * np.outer(np.ones(2), mu)
    return build_chain(Q, labels=[repr(ts.a), repr(ts.b)])


def two_state_eigen_oracle(ts: TwoStateSystem, t: float) -> float:
    """theta(t) from a dense symmetric eigensolve of the 2x2 tilted kernel."""
    mu = np.array([1.0 - ts.mu, ts.mu])
    Q = ts.lam * np.eye(2) + (1.0 - ts.lam) * np.outer(np.ones(2), mu)
    e = np.exp(0.5 * t * np.array([ts.a, ts.b]))
    s = np.sqrt(mu)
    M = (s[:, None] * (e[:, None] * Q * e[None, :])) / s[None, :]
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[-1])


class ExtremalityGap(NamedTuple):
    lhs: float
    rhs: float


def extremality_gap(chain_pihat: FiniteChain, f: StepFunction, t: float, n: int) -> ExtremalityGap:
    """Compare the mgf of sum f(X_i) under the lazy kernel with the two-state chain.

    ``lhs`` is E_pi[exp(t sum_{i<=n} f(X_i))] for the lazy i.i.d. kernel
    ``chain_pihat``; ``rhs`` is the same mgf for the two-state chain on
    {a, b} with the same lam and mean. The comparison theorem says
    lhs <= rhs.
    """
    c = leon_perron_coefficient(chain_pihat)
    if c is None:
        raise NotLeonPerron("chain is not of the form c I + (1 - c) 1 pi'")
    if n < 1:
        raise MarkovBoundError("n must be >= 1")
    a, b = f.a, f.b
    lhs = math.exp(exact_log_mgf(chain_pihat, None, [f] * n, t))
    if a == b:
        # degenerate range: both chains put all mass of the sum on n * a
        return ExtremalityGap(lhs, lhs)
    mu = (chain_pihat.expect(f.values) - a) / (b - a)
    mu = min(max(mu, 0.0), 1.0)
    if mu in (0.0, 1.0):
        # f sits at an endpoint pi-a.s.; the comparison chain is a point mass
        return ExtremalityGap(lhs, math.exp(t * n * (a if mu == 0.0 else b)))
    ts = TwoStateSystem(c, mu, a, b).validate()
    Q = two_state_matrix(ts)
    y = StepFunction(np.array([a, b]), a, b)
    rhs = math.exp(exact_log_mgf(Q, None, [y] * n, t))
    return ExtremalityGap(lhs, rhs)
