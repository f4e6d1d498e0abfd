"""Command-line front end: ``markov-hoeffding {gap,bound,plan,experiment,theta}``.

Exit status is 0 on success, 2 for malformed input and 3 when a theorem's
hypothesis fails for the supplied chain. Every CSV carries a leading
``# {...}`` line holding the run manifest and its SHA-256.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    StepFunction,
    bound_t21,
    bound_t22,
    bound_t23,
    bound_t62,
    bound_ta1,
    classical_hoeffding,
    mcmc_plan,
)
from .chain import (
    FiniteChain,
    MeasurePair,
    absolute_lambda,
    build_chain,
    leon_perron_kernel,
    load_chain,
    right_lambda,
    spectral_radius_lambda,
    spectral_summary,
)
from .errors import MarkovBoundError, PreconditionError
from .extremal import TwoStateSystem, theta, theta_tilde
from .learnlab import (
    BanditArm,
    block_sparse_features,
    dictionary_features,
    lasso_re_check,
    load_edge_list,
    ols_experiment,
    ols_n_min,
    rds_estimate,
    random_walk_chain,
    sparse_cov_experiment,
    ucb_bound,
    ucb_run,
)
from .sim import empirical_tail, exact_log_mgf, no_proxy_witness, table_csv

SEED_ENV = "MARKOV_HOEFFDING_SEED"
EXIT_INPUT = 2
EXIT_PRECONDITION = 3

MGF_COLUMNS = ["t", "exact_mgf", "bound", "ratio"]
TAIL_COLUMNS = ["eps", "empirical_tail", "wilson_halfwidth", "tail_bound"]
RUN_COLUMNS = ["run_id", "seed", "metric", "bound", "pass", "error"]
THETA_COLUMNS = ["t", "theta", "theta_tilde"]
SUITES = ("ols", "lasso", "cov", "rds", "bandit", "counterexample")


@dataclass
class RunManifest:
    command: str
    inputs: dict
    seed: int | None
    artifacts: list = field(default_factory=list)
    version: str = __version__

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def header(self) -> dict:
        return {"manifest": asdict(self), "manifest_sha256": self.digest()}


# ---------------------------------------------------------------- input helpers

def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MarkovBoundError(f"{path}: invalid JSON ({exc})") from exc


def _grid(text: str | None) -> list[float]:
    if not text:
        return []
    return [float(x) for x in text.split(",") if x.strip()]


def _norm_order(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _default_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    return int(os.environ.get(SEED_ENV, "0"))


def load_functions(path, d: int) -> list[StepFunction]:
    """Function file: ``{"values": [...], "a": .., "b": .., "n": N}`` or ``{"functions": [...]}``."""
    doc = _read_json(path)

    def one(spec) -> StepFunction:
        if "values" not in spec:
            raise MarkovBoundError("function entry needs 'values'")
        f = StepFunction(np.asarray(spec["values"], float), spec.get("a"), spec.get("b"))
        if f.values.size != d:
            raise MarkovBoundError(f"function has {f.values.size} values, chain has {d} states")
        return f

    if "functions" in doc:
        fs = [one(s) for s in doc["functions"]]
    else:
        fs = [one(doc)] * int(doc.get("n", 1))
    if not fs:
        raise MarkovBoundError("no functions given")
    return fs


def load_measure(path, chain: FiniteChain, p: float) -> MeasurePair:
    if path is None:
        return MeasurePair(np.array(chain.pi), chain.pi, p)
    doc = _read_json(path)
    if "nu" not in doc:
        raise MarkovBoundError("measure file needs 'nu'")
    return MeasurePair(np.asarray(doc["nu"], float), chain.pi, p)


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------- gap / theta

def cmd_gap(args) -> int:
    chain = load_chain(args.chain_file)
    summ = spectral_summary(chain, args.k_max)
    man = RunManifest("gap", {"chain_file": str(args.chain_file), "k_max": args.k_max}, None,
                      [args.k_csv] if args.k_csv else [])
    doc = summ.to_dict()
    doc["alpha_abs_defined"] = summ.alpha_abs is not None
    doc["manifest_sha256"] = man.digest()
    print(json.dumps(doc, indent=2))
    if args.k_csv:
        rows = [{"k": k, "lambda_k": v} for k, v in enumerate(summ.k_sequence, start=1)]
        Path(args.k_csv).write_text(table_csv(rows, man.header()))
    return 0


def cmd_theta(args) -> int:
    ts = TwoStateSystem(args.lam, args.mu, args.a, args.b).validate()
    man = RunManifest("theta", {"lam": args.lam, "mu": args.mu, "a": args.a, "b": args.b,
                                "t_grid": args.t_grid}, None, [args.out] if args.out else [])
    rows = [{"t": t, "theta": theta(ts, t), "theta_tilde": theta_tilde(ts, t)} for t in _grid(args.t_grid)]
    _write(table_csv(rows, man.header()), args.out)
    return 0


# ---------------------------------------------------------------- bound

def _bound_setup(args, chain: FiniteChain, fs):
    """Return (start vector, report factory taking (t, eps))."""
    theorem = args.theorem
    start = np.array(chain.pi)
    p = _norm_order(args.p)
    if theorem in ("t23", "t62"):
        mp = load_measure(args.nu_file, chain, p)
        start = mp.nu
    if theorem == "classical":
        return start, lambda t, e: classical_hoeffding([f.range for f in fs], t, e)
    if theorem == "t21":
        lam = absolute_lambda(chain)
        return start, lambda t, e: bound_t21(lam, [f.range for f in fs], t, e)
    if theorem == "t22":
        _require_identical(fs)
        lr = right_lambda(chain)
        return start, lambda t, e: bound_t22(lr, fs[0].range, len(fs), t, e)
    if theorem == "t23":
        lam = absolute_lambda(chain)
        return start, lambda t, e: bound_t23(lam, mp, [f.range for f in fs], t, e)
    if theorem == "t62":
        _require_identical(fs)
        lam, lr = absolute_lambda(chain), right_lambda(chain)
        # the sum starts after n0 burn-in steps
        start = mp.nu @ np.linalg.matrix_power(chain.P, args.n0)
        return start, lambda t, e: bound_t62(lam, lr, mp, args.n0, fs[0].range, len(fs), t, e)
    if theorem == "ta1":
        _, _, seq = spectral_radius_lambda(chain, args.k)
        lam_k = float(seq[args.k - 1])
        return start, lambda t, e: bound_ta1(lam_k, args.k, [f.range for f in fs], t, e)
    raise MarkovBoundError(f"unknown theorem {theorem!r}")


def _require_identical(fs) -> None:
    f0 = fs[0]
    if any(not np.array_equal(f.values, f0.values) or f.range != f0.range for f in fs):
        raise MarkovBoundError("this theorem needs the same function at every step")


def bound_tables(args) -> tuple[list[dict], list[dict], RunManifest]:
    chain = load_chain(args.chain_file)
    fs = load_functions(args.f_file, chain.d)
    seed = _default_seed(args.seed)
    start, report = _bound_setup(args, chain, fs)
    mgf_rows = []
    for t in _grid(args.t_grid):
        log_exact = exact_log_mgf(chain, start, fs, t, center=True)
        rep = report(t, None)
        ratio = math.exp(log_exact - rep.log_mgf_bound_at_t)
        mgf_rows.append({"t": t, "exact_mgf": math.exp(log_exact), "bound": rep.mgf_bound_at_t, "ratio": ratio})
    tail_rows = []
    for eps in _grid(args.eps_grid):
        ph, half = empirical_tail(chain, start, fs, eps, args.reps, seed)
        tail_rows.append({"eps": eps, "empirical_tail": ph, "wilson_halfwidth": half,
                          "tail_bound": report(None, eps).tail_bound_at_eps})
    inputs = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    return mgf_rows, tail_rows, RunManifest("bound", inputs, seed)


def cmd_bound(args) -> int:
    mgf_rows, tail_rows, man = bound_tables(args)
    if args.out:
        mgf_path, tail_path = f"{args.out}_mgf.csv", f"{args.out}_tail.csv"
        man.artifacts = [mgf_path, tail_path]
        Path(mgf_path).write_text(_table(mgf_rows, MGF_COLUMNS, man))
        Path(tail_path).write_text(_table(tail_rows, TAIL_COLUMNS, man))
    else:
        sys.stdout.write(_table(mgf_rows, MGF_COLUMNS, man))
        sys.stdout.write("\n")
        sys.stdout.write(_table(tail_rows, TAIL_COLUMNS, man))
    return 0


def _table(rows, columns, man: RunManifest) -> str:
    # header row even for empty tables keeps the schema parseable
    text = table_csv(rows, man.header())
    if not rows:
        text += ",".join(columns) + "\n"
    return text


# ---------------------------------------------------------------- plan

def cmd_plan(args) -> int:
    chain = load_chain(args.chain_file)
    p = _norm_order(args.p)
    mp = load_measure(args.nu_file, chain, p)
    a, b = _grid(args.range)
    lam, lr = absolute_lambda(chain), right_lambda(chain)
    plan = mcmc_plan(lam, lr, mp, args.n0, (a, b), args.eps, args.delta)
    man = RunManifest("plan", {"chain_file": str(args.chain_file), "eps": args.eps, "delta": args.delta,
                               "p": args.p, "n0": args.n0, "range": [a, b],
                               "nu_file": None if args.nu_file is None else str(args.nu_file)}, None)
    doc = plan._asdict()
    doc["p"] = "inf" if math.isinf(plan.p) else plan.p
    doc.update(lam=lam, lam_r=lr, manifest_sha256=man.digest())
    print(json.dumps(doc, indent=2))
    return 0


# ---------------------------------------------------------------- experiments

def _config_chain(cfg: dict, base: Path) -> FiniteChain:
    if "chain" in cfg:
        return load_chain(base / cfg["chain"])
    if "P" in cfg:
        return build_chain(cfg["P"])
    if "lp" in cfg:
        return leon_perron_kernel(cfg["lp"]["pi"], cfg["lp"]["c"])
    raise MarkovBoundError("config needs a 'chain' file, an inline 'P', or 'lp': {pi, c}")


def _row(run_id, seed, metric, bound, ok, error=""):
    return {"run_id": run_id, "seed": seed, "metric": metric, "bound": bound, "pass": ok, "error": error}


def _guarded(fn, run_id: int, seed: int) -> dict:
    # a failing run is recorded, never fatal for the suite
    try:
        return fn(run_id, seed)
    except MarkovBoundError as exc:
        return _row(run_id, seed, "", "", False, f"{type(exc).__name__}: {exc}")


class _OlsTask:
    def __init__(self, chain, fmap, beta, sigma, n, delta):
        self.args = (chain, fmap, beta, sigma, n, delta)

    def __call__(self, run_id, seed):
        r = ols_experiment(*self.args, seed)
        return _row(run_id, seed, r.err, r.bound, r.err <= r.bound)


class _CovTask:
    def __init__(self, chain, fmap, s, m, delta, n):
        self.args = (chain, fmap, s, m, delta, n)

    def __call__(self, run_id, seed):
        r = sparse_cov_experiment(*self.args, seed)
        return _row(run_id, seed, r.err_1norm, r.bound, r.err_1norm <= r.bound)


class _RdsTask:
    def __init__(self, graph, infected, n, eps):
        self.args = (graph, infected, n)
        self.eps = eps

    def __call__(self, run_id, seed):
        r = rds_estimate(*self.args, seed, eps=self.eps)
        return _row(run_id, seed, r.avg_deviation, r.tail_at_eps, r.avg_deviation <= self.eps)


class _BanditTask:
    def __init__(self, arms, c, T):
        self.args = (arms, c, T)

    def __call__(self, run_id, seed):
        tr = ucb_run(*self.args, seed)
        return _row(run_id, seed, tr.pseudo_regret, tr.bound, tr.bound is not None and tr.pseudo_regret <= tr.bound)


def _apply(task, pair):
    return _guarded(task, *pair)


def _fan_out(task, runs: int, seed: int, jobs: int) -> list[dict]:
    pairs = [(i, seed + i) for i in range(runs)]
    if jobs <= 1:
        rows = [_guarded(task, i, s) for i, s in pairs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(partial(_apply, task), pairs))
    return sorted(rows, key=lambda r: r["run_id"])


def _summary(rows: list[dict], level: float) -> dict:
    ok = [bool(r["pass"]) for r in rows]
    k, n = sum(ok), len(ok)
    frac = k / n if n else float("nan")
    se = math.sqrt(max(level * (1 - level), frac * (1 - frac)) / n) if n else float("nan")
    return _row("summary", "", frac, level, bool(n) and frac >= level - 3 * se, f"mc_se={se:.6g}")


def run_suite(suite: str, cfg: dict, base: Path = Path("."), jobs: int = 1,
              seed: int | None = None) -> tuple[list[dict], list[str]]:
    """Run one experiment suite; returns (rows, column names)."""
    seed = _default_seed(cfg.get("seed", seed) if seed is None else seed)
    runs = int(cfg.get("runs", 100))
    if suite == "counterexample":
        rows = []
        for lam in cfg.get("lams", [cfg.get("lam", 0.5)]):
            for r in no_proxy_witness(lam, cfg.get("t", 1.0), cfg.get("n_grid", [5, 10, 20, 40])):
                rows.append({"lam": lam, **r})
        return rows, ["lam", "n", "log_mgf", "log_mgf_per_n", "implied_alpha"]
    if suite == "bandit":
        arms = [BanditArm(_config_chain(a, base), StepFunction(np.asarray(a["reward"], float), 0.0, 1.0))
                for a in cfg["arms"]]
        T = int(cfg["T"])
        ucb_bound(arms, cfg["c"], T)  # CTooSmall before any run
        rows = _fan_out(_BanditTask(arms, cfg["c"], T), runs, seed, jobs)
        vals = [r["metric"] for r in rows if r["error"] == ""]
        mean = float(np.mean(vals)) if vals else float("nan")
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else float("nan")
        b = ucb_bound(arms, cfg["c"], T)
        rows.append(_row("summary", "", mean, b, mean <= b, f"mc_se={se:.6g}"))
        return rows, RUN_COLUMNS
    if suite == "rds":
        graph = load_edge_list(base / cfg["graph"])
        infected = np.asarray(cfg["infected"], float)
        n, eps = int(cfg["n"]), float(cfg["eps"])
        random_walk_chain(graph)  # Disconnected before any run
        rows = _fan_out(_RdsTask(graph, infected, n, eps), runs, seed, jobs)
        tail = next((r["bound"] for r in rows if r["error"] == ""), None)
        level = max(0.0, 1.0 - 2.0 * tail) if tail is not None else float("nan")
        rows.append(_summary(rows, level))
        return rows, RUN_COLUMNS
    chain = _config_chain(cfg, base)
    if suite == "lasso":
        fmap = dictionary_features(chain.pi, int(cfg["d_feat"]), int(cfg.get("feature_seed", 0)))
        rows = []
        for i, n in enumerate(cfg.get("n_grid", [cfg.get("n", 1000)])):
            chk = lasso_re_check(chain, fmap, int(cfg["s"]), float(cfg["delta"]), int(n))
            iid = lasso_re_check(chain, fmap, int(cfg["s"]), float(cfg["delta"]), int(n), lam_r=0.0)
            rows.append(_row(i, int(n), chk.kappa, iid.kappa, chk.feasible))
        return rows, RUN_COLUMNS
    delta = float(cfg["delta"])
    if suite == "ols":
        d = int(cfg["d_feat"])
        fmap = dictionary_features(chain.pi, d, int(cfg.get("feature_seed", 0)))
        beta = np.asarray(cfg.get("beta_star", np.ones(d)), float)
        n = int(cfg.get("n", 0)) or ols_n_min(chain, fmap, delta)
        rows = _fan_out(_OlsTask(chain, fmap, beta, float(cfg["sigma"]), n, delta), runs, seed, jobs)
        rows.append(_summary(rows, 1.0 - 4.0 * delta))
        return rows, RUN_COLUMNS
    if suite == "cov":
        fmap = block_sparse_features(chain.pi, int(cfg["n_blocks"]), int(cfg["s"]), int(cfg.get("feature_seed", 0)))
        rows = _fan_out(_CovTask(chain, fmap, int(cfg["s"]), float(cfg["m"]), delta, int(cfg["n"])),
                        runs, seed, jobs)
        rows.append(_summary(rows, 1.0 - 2.0 * fmap.d_feat ** (-delta)))
        return rows, RUN_COLUMNS
    raise MarkovBoundError(f"unknown suite {suite!r}")


def cmd_experiment(args) -> int:
    cfg = _read_json(args.config_file)
    base = Path(args.config_file).resolve().parent
    rows, cols = run_suite(args.suite, cfg, base, args.jobs, args.seed)
    man = RunManifest(f"experiment:{args.suite}", cfg, _default_seed(cfg.get("seed", args.seed)),
                      [args.out] if args.out else [])
    text = table_csv(rows, man.header())
    if not rows:
        text += ",".join(cols) + "\n"
    _write(text, args.out)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="markov-hoeffding", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gap", help="spectral summary of a chain")
    g.add_argument("chain_file", type=Path)
    g.add_argument("--k-max", type=int, default=50)
    g.add_argument("--k-csv", help="write the lambda_k sequence here")
    g.set_defaults(func=cmd_gap)

    b = sub.add_parser("bound", help="compare a bound with the exact mgf and simulated tails")
    b.add_argument("chain_file", type=Path)
    b.add_argument("f_file", type=Path)
    b.add_argument("--theorem", choices=["classical", "t21", "t22", "t23", "t62", "ta1"], default="t21")
    b.add_argument("--t-grid", default="-1,-0.5,0.5,1")
    b.add_argument("--eps-grid", default="")
    b.add_argument("--nu-file", type=Path)
    b.add_argument("--p", default="inf")
    b.add_argument("--n0", type=int, default=0)
    b.add_argument("--k", type=int, default=1, help="stride for ta1")
    b.add_argument("--reps", type=int, default=2000)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", help="file prefix; writes PREFIX_mgf.csv and PREFIX_tail.csv")
    b.set_defaults(func=cmd_bound)

    p = sub.add_parser("plan", help="MCMC run length for a target accuracy")
    p.add_argument("chain_file", type=Path)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--nu-file", type=Path)
    p.add_argument("--p", default="inf")
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--range", default="0,1")
    p.set_defaults(func=cmd_plan)

    e = sub.add_parser("experiment", help="run a seeded experiment suite")
    e.add_argument("config_file", type=Path)
    e.add_argument("--suite", choices=SUITES, required=True)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_experiment)

    t = sub.add_parser("theta", help="two-state eigenvalue and its envelope over a t grid")
    t.add_argument("--lam", type=float, required=True)
    t.add_argument("--mu", type=float, required=True)
    t.add_argument("--a", type=float, default=0.0)
    t.add_argument("--b", type=float, default=1.0)
    t.add_argument("--t-grid", default="-2,-1,0,1,2")
    t.add_argument("--out")
    t.set_defaults(func=cmd_theta)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (MarkovBoundError, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
