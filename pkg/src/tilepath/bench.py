"""Synthetic unmixing benchmarks: matrix ensembles, signals, trials and sweeps.

Every trial draws its own generator from ``SeedSequence([seed, value_index,
trial])`` so results do not depend on the number of workers or the order in
which trials finish.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from tilepath.decoders import iht_warm, lasso_supports, omp, plasso_supports
from tilepath.path import path
from tilepath.problem import Problem, decompose
from tilepath.selection import oracle_closest, rank_supports
from tilepath.tiling import build

log = logging.getLogger(__name__)

ENSEMBLES = ("gaussian", "circulant", "gamma_gaussian")
METHODS = ("omp", "l1iht", "lasso", "plasso", "mplasso_all", "mplasso_rank")
SWEEPS = ("support_size", "dimension", "noise", "fixed_beta")
_SWEEP_FIELD = {"support_size": "s", "dimension": "n", "noise": "sigma"}


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: str = "gaussian"
    m: int = 60
    n: int = 250
    s: int = 6
    c_min: float = 1.5
    c_max: float = 5.0
    v_amplitude: float = 0.2
    sigma: float = 0.02
    trials: int = 20
    seed: int = 0
    beta_range: tuple[float, float] = (1e-6, 100.0)
    methods: tuple[str, ...] = METHODS
    fixed_beta: float | None = None

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        if not 0 <= self.s <= self.m <= self.n:
            raise ValueError(f"need s <= m <= n, got s={self.s} m={self.m} n={self.n}")
        if self.c_min > self.c_max:
            raise ValueError("c_min must not exceed c_max")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        bad = [k for k in self.methods if k not in METHODS and k != "fixed_beta"]
        if bad:
            raise ValueError(f"unknown methods {bad}")


@dataclass
class MethodOutcome:
    support: tuple[int, ...] | None
    sd: int | None
    success: bool
    wall_time: float
    n_candidates: int = 0
    error: str | None = None


@dataclass
class TrialResult:
    trial: int
    true_support: tuple[int, ...]
    outcomes: dict[str, MethodOutcome] = field(default_factory=dict)


def gen_matrix(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    m, n = config.m, config.n
    if config.ensemble == "gaussian":
        return rng.standard_normal((m, n)) / math.sqrt(m)
    if config.ensemble == "circulant":
        b = rng.choice(np.array([-1.0, 1.0]), size=n)
        cols = rng.choice(n, size=m, replace=False)
        # row r is column cols[r] of the circulant b_{(j - i) mod n}
        i = np.arange(n)
        return b[(cols[:, None] - i[None, :]) % n] / math.sqrt(m)
    G = rng.gamma(shape=1.0, scale=1.0, size=m)
    Z = rng.standard_normal((m, n))
    return Z / G[:, None]


def gen_signal(config: ExperimentConfig, A: np.ndarray, rng: np.random.Generator):
    """Draw ``(u_true, v_true, delta, y)`` for the matrix ``A``."""
    n, s = config.n, config.s
    u = np.zeros(n)
    if s:
        pos = rng.choice(n, size=s, replace=False)
        mags = rng.uniform(config.c_min, config.c_max, size=s)
        mags[rng.integers(s)] = config.c_min
        u[pos] = mags * rng.choice(np.array([-1.0, 1.0]), size=s)
    v = rng.uniform(-config.v_amplitude, config.v_amplitude, size=n)
    clean = A @ (u + v)
    delta = rng.standard_normal(A.shape[0])
    nd = np.linalg.norm(delta)
    if config.sigma == 0 or nd == 0:
        delta = np.zeros(A.shape[0])
    else:
        delta *= config.sigma * np.linalg.norm(clean) / nd
    return u, v, delta, clean + delta


def gen_problem(config: ExperimentConfig, rng: np.random.Generator) -> Problem:
    A = gen_matrix(config, rng)
    u, v, delta, y = gen_signal(config, A, rng)
    return Problem(A, y, u, v, delta)


def _sd(a, b) -> int:
    return len(set(a) ^ set(b))


def _outcome(support, truth, t0, n_candidates=1) -> MethodOutcome:
    support = tuple(sorted(support))
    sd = _sd(support, truth)
    return MethodOutcome(support, sd, sd == 0, time.perf_counter() - t0, n_candidates)


def _closest(supports, truth, s):
    cands = [sup for sup in supports if len(sup) <= s]
    return oracle_closest(cands, truth), len(cands)


def run_trial(config: ExperimentConfig, rng: np.random.Generator, trial: int = 0, fixed_betas=None) -> TrialResult:
    """Generate one problem and run every configured method on it.

    ``fixed_betas`` adds one ``fixed_beta@<beta>`` outcome per value, each
    taking the closest support along the Lasso path at that single ``beta``.
    """
    problem = gen_problem(config, rng)
    truth = problem.true_support
    s = config.s
    res = TrialResult(trial, truth)
    betas = list(fixed_betas or [])
    if config.fixed_beta is not None:
        betas.append(config.fixed_beta)
    want = set(config.methods)
    t0 = time.perf_counter()
    bt = decompose(problem)
    prep = time.perf_counter() - t0

    def attempt(name, fn):
        t0 = time.perf_counter()
        try:
            res.outcomes[name] = fn(t0)
        except Exception as exc:  # recorded per method, the trial goes on
            log.warning("trial %d: %s failed: %s", trial, name, exc)
            res.outcomes[name] = MethodOutcome(None, None, False, time.perf_counter() - t0, 0, f"{type(exc).__name__}: {exc}")

    if "omp" in want:
        attempt("omp", lambda t0: _outcome(omp(problem, s).supports[0], truth, t0))
    if "l1iht" in want:
        attempt("l1iht", lambda t0: _outcome(iht_warm(problem, s, bt=bt).supports[0], truth, t0 - prep))
    if "lasso" in want:
        def run_lasso(t0):
            sup, k = _closest(lasso_supports(problem, s, bt=bt).supports, truth, s)
            return _outcome(sup, truth, t0 - prep, k)
        attempt("lasso", run_lasso)
    if "plasso" in want:
        def run_plasso(t0):
            sup, k = _closest(plasso_supports(problem, s).supports, truth, s)
            return _outcome(sup, truth, t0, k)
        attempt("plasso", run_plasso)

    graph = None
    t_graph = 0.0
    if want & {"mplasso_all", "mplasso_rank"} or betas:
        t0 = time.perf_counter()
        try:
            graph = build(bt, config.beta_range, s_max=s)
        except Exception as exc:
            msg = f"{type(exc).__name__}: {exc}"
            for name in ("mplasso_all", "mplasso_rank"):
                if name in want:
                    res.outcomes[name] = MethodOutcome(None, None, False, time.perf_counter() - t0, 0, msg)
        t_graph = time.perf_counter() - t0 + prep
    if graph is not None:
        supports = sorted({sup for sup, _ in graph.supports()})
        if "mplasso_all" in want:
            def run_all(t0):
                sup, k = _closest(supports, truth, s)
                return _outcome(sup, truth, t0 - t_graph, k)
            attempt("mplasso_all", run_all)
        if "mplasso_rank" in want:
            def run_rank(t0):
                size = max((len(c) for c in supports if len(c) <= s), default=0)
                cands = [c for c in supports if len(c) == size]
                return _outcome(rank_supports(problem, cands, size), truth, t0 - t_graph, len(cands))
            attempt("mplasso_rank", run_rank)
    for beta in betas:
        def run_fixed(t0, beta=beta):
            knots = path(bt, beta, s)
            sup, k = _closest([()] + [kn.support for kn in knots], truth, s)
            return _outcome(sup, truth, t0 - prep, k)
        attempt(f"fixed_beta@{beta!r}", run_fixed)
    return res


def trial_rng(seed: int, value_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, value_index, trial]))


def _job(args):
    config, vi, t, fixed_betas = args
    return vi, run_trial(config, trial_rng(config.seed, vi, t), t, fixed_betas)


@dataclass
class SweepResult:
    sweep: str
    values: list
    rows: list[dict]
    trials: dict[int, list[TrialResult]]

    def error_rates(self) -> dict[tuple, float]:
        return {(r["value"], r["method"]): r["errors"] / r["trials"] for r in self.rows}


def _aggregate(sweep, value, method, outcomes: list[MethodOutcome]) -> dict:
    ok = [o for o in outcomes if o.error is None]
    times = [o.wall_time for o in outcomes]
    return {
        "sweep": sweep,
        "value": value,
        "method": method,
        "trials": len(outcomes),
        "success_rate": sum(o.success for o in outcomes) / len(outcomes),
        "mean_sd": float(np.mean([o.sd for o in ok])) if ok else math.nan,
        "errors": len(outcomes) - len(ok),
        "time_mean": float(np.mean(times)),
        "time_max": float(np.max(times)),
    }


def run_sweep(config: ExperimentConfig, sweep: str, values, workers: int = 1) -> SweepResult:
    """Run ``config.trials`` trials per value of the swept field.

    For ``fixed_beta`` the same trials serve every ``beta``: each trial builds
    its tiling once and follows a single-``beta`` path per value.
    """
    if sweep not in SWEEPS:
        raise ValueError(f"unknown sweep {sweep!r}; choose from {SWEEPS}")
    values = list(values)
    if not values:
        raise ValueError("no sweep values")
    jobs = []
    if sweep == "fixed_beta":
        betas = [float(b) for b in values]
        if any(b <= 0 for b in betas):
            raise ValueError("fixed beta values must be positive")
        jobs = [(config, 0, t, betas) for t in range(config.trials)]
    else:
        fld = _SWEEP_FIELD[sweep]
        cast = float if fld == "sigma" else int
        cfgs = [replace(config, **{fld: cast(v)}) for v in values]
        jobs = [(c, vi, t, None) for vi, c in enumerate(cfgs) for t in range(config.trials)]

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            done = list(ex.map(_job, jobs))
    else:
        done = [_job(j) for j in jobs]
    by_value: dict[int, list[TrialResult]] = {}
    for vi, tr in done:
        by_value.setdefault(vi, []).append(tr)
    for trs in by_value.values():
        trs.sort(key=lambda r: r.trial)

    rows = []
    if sweep == "fixed_beta":
        trs = by_value[0]
        for b in betas:
            rows.append(_aggregate(sweep, b, "fixed_beta", [t.outcomes[f"fixed_beta@{b!r}"] for t in trs]))
            for name in config.methods:
                if name in trs[0].outcomes:
                    rows.append(_aggregate(sweep, b, name, [t.outcomes[name] for t in trs]))
    else:
        for vi, v in enumerate(values):
            trs = by_value[vi]
            for name in trs[0].outcomes:
                rows.append(_aggregate(sweep, v, name, [t.outcomes[name] for t in trs]))
    return SweepResult(sweep, values, rows, by_value)


CSV_FIELDS = ("sweep", "value", "method", "trials", "success_rate", "mean_sd", "errors")
TIMING_FIELDS = ("sweep", "value", "method", "time_mean", "time_max")


def _csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def results_csv(result: SweepResult) -> str:
    """One row per (value, method).  Timings are left out so reruns compare byte for byte."""
    return _csv(result.rows, CSV_FIELDS)


def timings_csv(result: SweepResult) -> str:
    return _csv(result.rows, TIMING_FIELDS)


def results_json(result: SweepResult, config: ExperimentConfig) -> str:
    """Full per-trial detail, without wall times."""

    def outcome(o: MethodOutcome):
        d = asdict(o)
        d.pop("wall_time")
        d["support"] = list(o.support) if o.support is not None else None
        return d

    doc = {
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()},
        "sweep": result.sweep,
        "values": result.values,
        "summary": [{k: _finite(r[k]) for k in CSV_FIELDS} for r in result.rows],
        "trials": {
            str(vi): [
                {
                    "trial": tr.trial,
                    "true_support": list(tr.true_support),
                    "outcomes": {k: outcome(o) for k, o in sorted(tr.outcomes.items())},
                }
                for tr in trs
            ]
            for vi, trs in sorted(result.trials.items())
        },
    }
    return json.dumps(doc, indent=1, sort_keys=True, default=_json_default)


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(f"not serialisable: {type(x).__name__}")


def format_table(result: SweepResult) -> str:
    lines = [f"{'value':>10} {'method':>14} {'success':>8} {'mean SD':>8} {'errors':>6} {'time [s]':>9}"]
    for r in result.rows:
        lines.append(
            f"{r['value']!s:>10} {r['method']:>14} {r['success_rate']:8.3f} {r['mean_sd']:8.3f} "
            f"{r['errors']:6d} {r['time_mean']:9.4f}"
        )
    return "\n".join(lines)


def _finite(x):
    return None if isinstance(x, float) and not math.isfinite(x) else x
