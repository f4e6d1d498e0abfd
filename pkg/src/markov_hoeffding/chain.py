"""Finite-state Markov chains viewed as operators on L2(pi).

All pi-weighted norms are realised through the similarity transform
``D = diag(sqrt(pi))``: an operator ``T`` on L2(pi) has the same operator norm
as the Euclidean matrix ``D T D^{-1}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateStationary, MarkovBoundError, NotStochastic

ROW_SUM_TOL = 1e-9
POWER_TOL = 1e-14
POWER_MAX_ITER = 1_000_000
PI_FLOOR = 1e-13


@dataclass(frozen=True)
class FiniteChain:
    """Row-stochastic kernel ``P`` on ``d`` states with its stationary ``pi``.

    Build instances with :func:`build_chain`; the constructor does not validate.
    """

    P: np.ndarray
    pi: np.ndarray
    labels: tuple[str, ...] | None = None

    @property
    def d(self) -> int:
        return self.P.shape[0]

    def expect(self, f) -> float:
        """pi(f) for a state function given as an array."""
        return float(np.dot(self.pi, np.asarray(f, dtype=float)))

    def to_json(self) -> str:
        out = {"P": self.P.tolist()}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return json.dumps(out)


@dataclass(frozen=True)
class MeasurePair:
    """An initial law ``nu`` together with its density with respect to ``pi``.

    ``p`` is the norm order used for the density (``math.inf`` allowed).
    """

    nu: np.ndarray
    pi: np.ndarray
    p: float
    density: np.ndarray = field(init=False)

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        pi = np.asarray(self.pi, dtype=float)
        if nu.shape != pi.shape:
            raise MarkovBoundError("nu and pi must have the same length")
        if np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-12:
            raise MarkovBoundError("nu must be a probability vector")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "density", nu / pi)

    @property
    def q(self) -> float:
        """Hoelder conjugate p / (p - 1); equals 1 at p = inf."""
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)


@dataclass(frozen=True)
class SpectralSummary:
    lambda_abs: float
    lambda_right: float
    lambda_inf_estimate: float
    k_used: int
    alpha_abs: float | None
    alpha_right: float | None
    k_sequence: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "lambda_abs": self.lambda_abs,
            "lambda_right": self.lambda_right,
            "lambda_inf_estimate": self.lambda_inf_estimate,
            "k_used": self.k_used,
            "alpha_abs": self.alpha_abs,
            "alpha_right": self.alpha_right,
            "k_sequence": list(self.k_sequence),
        }


def _stationary(P: np.ndarray) -> np.ndarray:
    d = P.shape[0]
    A = np.eye(d) - P.T
    # null space must be one-dimensional for a unique invariant law
    sv = np.linalg.svd(A, compute_uv=False)
    if d > 1 and sv[-2] < 1e-10:
        raise DegenerateStationary("stationary distribution is not unique (reducible kernel)")
    M = np.vstack([A, np.ones((1, d))])
    rhs = np.zeros(d + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.max(np.abs(pi @ P - pi)) > 1e-11:
        pi = _power_iterate(P)
    return pi


def _power_iterate(P: np.ndarray) -> np.ndarray:
    d = P.shape[0]
    pi = np.full(d, 1.0 / d)
    # lazy version shares pi and removes periodicity
    L = 0.5 * (np.eye(d) + P)
    for _ in range(POWER_MAX_ITER):
        nxt = pi @ L
        if np.max(np.abs(nxt - pi)) < POWER_TOL:
            return nxt
        pi = nxt
    return pi


def build_chain(P, labels: Sequence[str] | None = None) -> FiniteChain:
    """Validate a transition matrix and attach its stationary distribution.

    Raises NotStochastic for rows that do not sum to one (tolerance 1e-9) or
    entries outside [0, 1], and DegenerateStationary when the invariant law is
    not unique or not strictly positive.
    """
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise NotStochastic(f"transition matrix must be square, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise NotStochastic("transition matrix has non-finite entries")
    if np.any(P < -ROW_SUM_TOL) or np.any(P > 1 + ROW_SUM_TOL):
        raise NotStochastic("transition probabilities must lie in [0, 1]")
    rows = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise NotStochastic(f"row {bad[0]} sums to {rows[bad[0]]!r}, not 1")
    P = np.clip(P, 0.0, 1.0)
    P = P / P.sum(axis=1, keepdims=True)

    pi = _stationary(P)
    # solver residue on a transient state is ~1e-17, not a real mass
    if np.any(pi <= PI_FLOOR):
        raise DegenerateStationary("stationary distribution has zero-probability states")
    pi = pi / pi.sum()
    if np.max(np.abs(pi @ P - pi)) > 1e-10:
        raise DegenerateStationary("could not solve pi P = pi to 1e-10")
    if labels is not None:
        labels = tuple(str(s) for s in labels)
        if len(labels) != P.shape[0]:
            raise MarkovBoundError("labels must match the number of states")
    P.setflags(write=False)
    pi.setflags(write=False)
    return FiniteChain(P, pi, labels)


def load_chain(path) -> FiniteChain:
    """Read the chain JSON format ``{"P": [[...]], "labels": [...]}``.

    Any stored ``pi`` is ignored and recomputed.
    """
    with open(Path(path)) as fh:
        doc = json.load(fh)
    if "P" not in doc:
        raise NotStochastic("chain file has no 'P' entry")
    return build_chain(doc["P"], doc.get("labels"))


def time_reversal(chain: FiniteChain) -> np.ndarray:
    """P*(x, y) = pi(y) P(y, x) / pi(x)."""
    pi = chain.pi
    return (chain.P.T * pi[None, :]) / pi[:, None]


def additive_reversiblization(chain: FiniteChain) -> np.ndarray:
    return 0.5 * (chain.P + time_reversal(chain))


def leon_perron_kernel(pi, c: float) -> FiniteChain:
    """Lazy i.i.d. kernel ``c I + (1 - c) 1 pi'``.

    Stays put with probability c, otherwise redraws from pi.
    """
    pi = np.asarray(pi, dtype=float)
    if not 0.0 <= c <= 1.0:
        raise MarkovBoundError(f"mixing coefficient must lie in [0, 1], got {c}")
    if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-12:
        raise MarkovBoundError("pi must be a strictly positive probability vector")
    P = c * np.eye(pi.size) + (1.0 - c) * np.outer(np.ones(pi.size), pi)
    P.setflags(write=False)
    pi = pi / pi.sum()
    pi.setflags(write=False)
    return FiniteChain(P, pi)


def leon_perron_coefficient(chain: FiniteChain, atol: float = 1e-10) -> float | None:
    """Return c if ``chain.P`` equals ``c I + (1 - c) 1 pi'``, else None."""
    P, pi, d = chain.P, chain.pi, chain.d
    if d == 1:
        return 0.0
    c = float((P[0, 0] - pi[0]) / (1.0 - pi[0]))
    ref = c * np.eye(d) + (1.0 - c) * np.outer(np.ones(d), pi)
    if np.max(np.abs(ref - P)) > atol:
        return None
    return c


def symmetrized(chain: FiniteChain, T: np.ndarray) -> np.ndarray:
    """Matrix of the operator T in the Euclidean picture: D T D^{-1}."""
    s = np.sqrt(chain.pi)
    return (s[:, None] * T) / s[None, :]


def projection(chain: FiniteChain) -> np.ndarray:
    """The kernel Pi(x, .) = pi, i.e. the matrix 1 pi'."""
    return np.outer(np.ones(chain.d), chain.pi)


def pi_operator_norm(chain: FiniteChain, T: np.ndarray) -> float:
    """Operator norm of T on L2(pi)."""
    return float(np.linalg.norm(symmetrized(chain, T), 2))


def absolute_lambda(chain: FiniteChain) -> float:
    """lambda(P) = |||P - Pi|||_pi, the complement of the absolute spectral gap."""
    if chain.d == 1:
        return 0.0
    val = pi_operator_norm(chain, chain.P - projection(chain))
    return float(min(max(val, 0.0), 1.0))


def _mean_zero_basis(chain: FiniteChain) -> np.ndarray:
    # orthonormal basis of the Euclidean complement of sqrt(pi)
    s = np.sqrt(chain.pi)[:, None]
    q, _ = np.linalg.qr(np.hstack([s, np.eye(chain.d)]))
    return q[:, 1 : chain.d]


def right_lambda(chain: FiniteChain) -> float:
    """Top of the spectrum of (P + P*)/2 restricted to mean-zero functions.

    Can be negative (e.g. -1 for the two-state flip). For d = 1 the mean-zero
    space is trivial and 0.0 is returned.
    """
    if chain.d == 1:
        return 0.0
    S = symmetrized(chain, additive_reversiblization(chain))
    S = 0.5 * (S + S.T)
    Q = _mean_zero_basis(chain)
    ev = np.linalg.eigvalsh(Q.T @ S @ Q)
    return float(np.clip(ev[-1], -1.0, 1.0))


def spectral_radius_lambda(chain: FiniteChain, k_max: int) -> tuple[float, int, np.ndarray]:
    """Estimate lambda_inf = lim |||P^k - Pi|||^{1/k}.

    Returns ``(estimate at k_max, k_max, sequence for k = 1..k_max)``. Powers
    are renormalised at every step so large k does not underflow. No stopping
    rule is applied; judge convergence from the sequence.
    """
    if k_max < 1:
        raise MarkovBoundError("k_max must be >= 1")
    if chain.d == 1:
        seq = np.zeros(k_max)
        return 0.0, k_max, seq
    M = symmetrized(chain, chain.P - projection(chain))
    seq = np.empty(k_max)
    cur = np.eye(chain.d)
    log_scale = 0.0
    for k in range(1, k_max + 1):
        cur = cur @ M
        nrm = np.linalg.norm(cur, 2)
        if nrm == 0.0 or not np.isfinite(log_scale):
            seq[k - 1:] = 0.0
            break
        log_scale += math.log(nrm)
        cur = cur / nrm
        seq[k - 1] = math.exp(log_scale / k)
    return float(seq[-1]), k_max, seq


def spectral_summary(chain: FiniteChain, k_max: int = 50) -> SpectralSummary:
    """Bundle lambda, lambda_r, the lambda_inf estimate and alpha values.

    alpha is reported as None when its argument is 1 (no gap).
    """
    lam = absolute_lambda(chain)
    lam_r = right_lambda(chain)
    est, k, seq = spectral_radius_lambda(chain, k_max)

    def _alpha(x: float) -> float | None:
        return None if x >= 1.0 - 1e-12 else (1.0 + x) / (1.0 - x)

    return SpectralSummary(
        lambda_abs=lam,
        lambda_right=lam_r,
        lambda_inf_estimate=est,
        k_used=k,
        alpha_abs=_alpha(lam),
        alpha_right=_alpha(max(lam_r, 0.0)),
        k_sequence=tuple(float(v) for v in seq),
    )


def random_chain(d: int, rng: np.random.Generator, concentration: float = 1.0) -> FiniteChain:
    """Dense random chain with Dirichlet rows; redrawn until pi has full support."""
    while True:
        P = rng.dirichlet(np.full(d, concentration), size=d)
        try:
            return build_chain(P)
        except (DegenerateStationary, NotStochastic):
            continue
