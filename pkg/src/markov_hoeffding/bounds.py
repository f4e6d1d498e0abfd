"""Hoeffding-type mgf and tail bounds for sums along a Markov chain.

Every evaluator returns a :class:`BoundReport`. Conventions shared by all of
them:

* ``t`` is the mgf argument for the centred sum ``sum_i (f_i(X_i) - pi(f_i))``;
* ``eps`` is a deviation of that *sum* (not of the average), so every tail is
  ``2 * prefactor * exp(-eps**2 / (2 * variance_proxy))``;
* spectral quantities are inputs, so bounds can be evaluated for hypothetical
  gaps. Use :mod:`markov_hoeffding.chain` to compute them from a kernel.

Tail values above 1 are reported unclamped and flagged ``vacuous``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .chain import MeasurePair
from .errors import GapExhausted, InvalidP, MarkovBoundError

GAP_TOL = 1e-12

THEOREMS = ("Classical", "T2_1", "T2_2", "T2_3", "T6_2", "TA_1", "Inhomog")


@dataclass(frozen=True)
class StepFunction:
    """A function on states with a declared range ``[a, b]``."""

    values: np.ndarray
    a: float = None
    b: float = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise MarkovBoundError("step function values must be a non-empty vector")
        a = float(v.min()) if self.a is None else float(self.a)
        b = float(v.max()) if self.b is None else float(self.b)
        if a > b or v.min() < a or v.max() > b:
            raise MarkovBoundError(f"declared range [{a}, {b}] does not contain the values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def range(self) -> tuple[float, float]:
        return (self.a, self.b)

    @property
    def span(self) -> float:
        return self.b - self.a

    def shifted(self, c: float) -> "StepFunction":
        return StepFunction(self.values - c, self.a - c, self.b - c)


@dataclass(frozen=True)
class BoundReport:
    theorem_id: str
    variance_proxy: float
    prefactor: float = 1.0
    t: float | None = None
    eps: float | None = None
    mgf_bound_at_t: float | None = None
    log_mgf_bound_at_t: float | None = None
    tail_bound_at_eps: float | None = None
    vacuous: bool = False
    inputs_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


class McmcPlan(NamedTuple):
    n0: int
    p: float
    q: float
    c_p: float
    n_required: int


class InhomogeneousProxy(NamedTuple):
    fine: float
    coarse: float


def alpha(lam: float) -> float:
    """Dependence penalty (1 + lam) / (1 - lam)."""
    if lam >= 1.0 - GAP_TOL:
        raise GapExhausted(f"spectral gap exhausted: lambda = {lam!r} >= 1")
    return (1.0 + lam) / (1.0 - lam)


def _ranges(ranges) -> list[tuple[float, float]]:
    out = []
    for r in ranges:
        if isinstance(r, StepFunction):
            a, b = r.a, r.b
        else:
            a, b = (float(r[0]), float(r[1]))
        if a > b:
            raise MarkovBoundError(f"range ({a}, {b}) has a > b")
        out.append((a, b))
    if not out:
        raise MarkovBoundError("at least one range is required")
    return out


def _hoeffding_mass(ranges) -> float:
    return float(sum((b - a) ** 2 / 4.0 for a, b in ranges))


def _report(theorem, proxy, t, eps, prefactor=1.0, **echo) -> BoundReport:
    log_mgf = mgf = tail = None
    if t is not None:
        log_mgf = math.log(prefactor) + 0.5 * t * t * proxy
        mgf = math.exp(log_mgf) if log_mgf < 700.0 else math.inf
    if eps is not None:
        if eps <= 0:
            raise MarkovBoundError("eps must be positive")
        tail = 0.0 if proxy == 0.0 else 2.0 * prefactor * math.exp(-eps * eps / (2.0 * proxy))
    return BoundReport(
        theorem_id=theorem,
        variance_proxy=proxy,
        prefactor=prefactor,
        t=t,
        eps=eps,
        mgf_bound_at_t=mgf,
        log_mgf_bound_at_t=log_mgf,
        tail_bound_at_eps=tail,
        vacuous=tail is not None and tail > 1.0,
        inputs_echo=echo,
    )


def classical_hoeffding(ranges, t: float | None = None, eps: float | None = None) -> BoundReport:
    """Independent-sum baseline with proxy sum (b_i - a_i)^2 / 4."""
    rs = _ranges(ranges)
    return _report("Classical", _hoeffding_mass(rs), t, eps, ranges=rs)


def bound_t21(lam: float, ranges, t: float | None = None, eps: float | None = None) -> BoundReport:
    """Time-dependent functions, absolute gap: proxy alpha(lam) * sum (b_i - a_i)^2 / 4."""
    rs = _ranges(ranges)
    proxy = alpha(lam) * _hoeffding_mass(rs)
    return _report("T2_1", proxy, t, eps, lam=lam, ranges=rs)


def _t22_proxy(lam_r: float, a: float, b: float, n: int, q: float) -> float:
    if n < 1:
        raise MarkovBoundError("n must be >= 1")
    return q * alpha(max(lam_r, 0.0)) * (n * ((b - a) ** 2 / 4.0))


def bound_t22(lam_r: float, range_, n: int, t: float | None = None, eps: float | None = None) -> BoundReport:
    """One function repeated n times, right gap; negative lam_r is clamped to 0."""
    a, b = _ranges([range_])[0]
    proxy = _t22_proxy(lam_r, a, b, n, 1.0)
    return _report("T2_2", proxy, t, eps, lam_r=lam_r, range=(a, b), n=n)


def density_pnorm(mp: MeasurePair, shift: str = "raw") -> float:
    """||g||_{pi,p} with g = d nu / d pi (``raw``) or g - 1 (``minus_one``)."""
    if shift == "raw":
        g = mp.density
    elif shift == "minus_one":
        g = mp.density - 1.0
    else:
        raise MarkovBoundError(f"unknown shift {shift!r}")
    g = np.abs(g)
    if math.isinf(mp.p):
        return float(g.max())
    return float(np.dot(mp.pi, g ** mp.p) ** (1.0 / mp.p))


def _check_p(p: float):
    if not p > 1.0:
        raise InvalidP(f"norm order must exceed 1, got {p}")


def bound_t23(lam: float, mp: MeasurePair, ranges, t: float | None = None,
              eps: float | None = None) -> BoundReport:
    """Chain started from nu: prefactor ||d nu/d pi||_p, proxy q times the stationary one."""
    _check_p(mp.p)
    rs = _ranges(ranges)
    pref = density_pnorm(mp, "raw")
    proxy = mp.q * alpha(lam) * _hoeffding_mass(rs)
    return _report("T2_3", proxy, t, eps, prefactor=pref, lam=lam, p=mp.p, ranges=rs,
                   nu=mp.nu.tolist())


def c_p_prefactor(lam: float, mp: MeasurePair, n0: int) -> float:
    """Burn-in prefactor C_p(nu, n0) bounding ||d(nu P^n0)/d pi||_p.

    Four regimes in the norm order p: (1, 2), 2, (2, inf) and inf.
    """
    _check_p(mp.p)
    if n0 < 0:
        raise MarkovBoundError("burn-in length must be >= 0")
    p, q = mp.p, mp.q
    if math.isinf(p):
        return density_pnorm(mp, "raw")
    dev = density_pnorm(mp, "minus_one")
    if p < 2.0:
        return 1.0 + 2.0 ** (2.0 / p) * lam ** (2.0 * n0 / q) * dev
    if p == 2.0:
        return 1.0 + lam ** n0 * dev
    return 1.0 + 2.0 ** (2.0 / q) * lam ** (2.0 * n0 / p) * dev


def bound_t62(lam: float, lam_r: float, mp: MeasurePair, n0: int, range_, n: int,
              t: float | None = None, eps: float | None = None) -> BoundReport:
    """MCMC sum over steps n0+1..n0+n started from nu.

    ``eps`` is a deviation of the sum; the average deviation e corresponds to
    ``eps = n * e``.
    """
    _check_p(mp.p)
    a, b = _ranges([range_])[0]
    pref = c_p_prefactor(lam, mp, n0)
    proxy = _t22_proxy(lam_r, a, b, n, mp.q)
    return _report("T6_2", proxy, t, eps, prefactor=pref, lam=lam, lam_r=lam_r, p=mp.p,
                   n0=n0, range=(a, b), n=n)


def mcmc_plan(lam: float, lam_r: float, mp: MeasurePair, n0: int, range_, eps: float,
              delta: float) -> McmcPlan:
    """Smallest post-burn-in run length n whose tail bound for the average is <= delta.

    ``eps`` here is the tolerated error of the *average*.
    """
    if eps <= 0:
        raise MarkovBoundError("eps must be positive")
    if not 0.0 < delta < 1.0:
        raise MarkovBoundError("delta must lie in (0, 1)")
    a, b = _ranges([range_])[0]
    cp = c_p_prefactor(lam, mp, n0)
    w = (b - a) ** 2 / 4.0
    n = max(1, math.ceil(2.0 * mp.q * alpha(max(lam_r, 0.0)) * w * math.log(2.0 * cp / delta) / eps**2))

    def tail(m: int) -> float:
        return bound_t62(lam, lam_r, mp, n0, (a, b), m, eps=m * eps).tail_bound_at_eps

    # settle rounding at the boundary by direct evaluation
    while tail(n) > delta:
        n += 1
    while n > 1 and tail(n - 1) <= delta:
        n -= 1
    return McmcPlan(n0=n0, p=mp.p, q=mp.q, c_p=cp, n_required=n)


def inhomogeneous_proxy(lams: Sequence[float], ranges) -> InhomogeneousProxy:
    """Proxy for a chain whose kernel changes between steps.

    ``lams[i]`` is the lambda of the kernel moving step i to step i+1, so n
    ranges take n - 1 lambdas. Returns the fine sum and the coarser
    ``alpha(max lambda) * sum (b_i - a_i)^2 / 4``.
    """
    rs = _ranges(ranges)
    n = len(rs)
    lams = [float(x) for x in lams]
    if len(lams) != n - 1:
        raise MarkovBoundError(f"{n} ranges need {n - 1} lambdas, got {len(lams)}")
    sq = [(b - a) ** 2 for a, b in rs]
    fine = sq[0] / 8.0 + sq[-1] / 8.0
    for i in range(1, n):
        fine += alpha(lams[i - 1]) * (sq[i - 1] + sq[i]) / 8.0
    coarse = alpha(max(lams, default=0.0)) * _hoeffding_mass(rs)
    assert fine <= coarse * (1 + 1e-12) + 1e-300, (fine, coarse)
    return InhomogeneousProxy(fine, coarse)


def bound_inhomogeneous(lams: Sequence[float], ranges, t: float | None = None,
                        eps: float | None = None) -> BoundReport:
    rs = _ranges(ranges)
    fine, _ = inhomogeneous_proxy(lams, rs)
    return _report("Inhomog", fine, t, eps, lams=list(lams), ranges=rs)


def stride_classes(n: int, k: int) -> list[list[int]]:
    """0-based indices split into k classes by residue mod k."""
    return [list(range(j, n, k)) for j in range(k)]


def bound_ta1(lam_k: float, k: int, ranges, t: float | None = None,
              eps: float | None = None) -> BoundReport:
    """Grouped bound using the k-step contraction lam_k = |||P^k - Pi|||^{1/k}.

    Proxy is ``k * alpha(lam_k**k) * k * max_j sum_{i in I_j} (b_i - a_i)^2 / 4``.
    """
    if k < 1:
        raise MarkovBoundError("k must be >= 1")
    rs = _ranges(ranges)
    mass = max(_hoeffding_mass([rs[i] for i in cls]) if cls else 0.0
               for cls in stride_classes(len(rs), k))
    proxy = k * alpha(lam_k ** k) * (k * mass)
    return _report("TA_1", proxy, t, eps, lam_k=lam_k, k=k, ranges=rs)


def ranges_of(fs: Iterable[StepFunction]) -> list[tuple[float, float]]:
    return [f.range for f in fs]
