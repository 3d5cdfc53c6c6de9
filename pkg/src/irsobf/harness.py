"""Experiment orchestration: seeded trials, aggregation, and tabular output.

``run_experiment`` executes every scenario of a sweep for the configured
number of trials, attaches the matching closed-form reference where one
exists, and aggregates means and standard errors.  Trials may run in a
process pool; results are keyed by trial index, so parallel and sequential
execution emit identical rows.
"""

import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import scaling
from .channel import exp_correlation, los_bs_irs
from .scenario import Scenario
from .scheduling import RunResult, _los_angle, run_frames
from .streams import RngStreams

__all__ = ["TrialSummary", "ResultRow", "run_experiment", "run_trial", "emit_results", "write_results"]

CSV_COLUMNS = (
    "scenario_id",
    "K",
    "N",
    "strategy",
    "scheduler",
    "eta",
    "sum_rate",
    "stderr",
    "analytic_ref",
    "seed",
)


@dataclass
class TrialSummary:
    """Single-trial quantities kept for aggregation and acceptance checks."""

    trial: int
    sum_rate: float
    throughputs: np.ndarray
    bf_rates: np.ndarray | None
    direct_rates: np.ndarray | None
    beta_r: np.ndarray
    beta_d: np.ndarray


@dataclass
class ResultRow:
    """Aggregated outcome of one scenario across trials."""

    scenario_id: str
    n_users: int
    n_elements: int
    strategy: str
    scheduler: str
    eta: float | None
    sum_rate: float
    stderr: float
    analytic_ref: float | None
    seed: int
    throughput_summary: tuple
    trials: list | None = None


def run_trial(scenario: Scenario, trial: int) -> TrialSummary:
    """Run one trial on its own deterministic stream bundle."""
    streams = RngStreams.from_seed(scenario.seed, trial)
    result: RunResult = run_frames(scenario, streams)
    return TrialSummary(
        trial=trial,
        sum_rate=result.sum_rate,
        throughputs=result.throughputs,
        bf_rates=result.bf_rates,
        direct_rates=result.direct_rates,
        beta_r=result.beta_r,
        beta_d=result.beta_d,
    )


def _analytic_reference(scenario: Scenario, trials: list) -> float | None:
    """Closed-form companion value for scenarios that have one.

    Slow fading with coherent or randomly-rotated phases: mean of the
    per-user coherent rates (the large-population limit).  Fast fading with
    a fixed or uniform-random design: the log K scaling law with the
    per-user link budgets averaged.  Trials are averaged the same way the
    Monte Carlo mean is.
    """
    strat = scenario.strategy.kind
    if scenario.fading.kind == "slow":
        if strat in ("coherent", "stationary_random") and scenario.strategy.bits is None:
            refs = [scaling.asymptotic_limit(t.bf_rates) for t in trials if t.bf_rates is not None]
            return float(np.mean(refs)) if refs else None
        return None
    if scenario.n_users < 2:
        return None
    n = scenario.n_elements
    if strat == "off" or n == 0:
        zeta_val = 0.0
    elif strat == "uniform_random" and scenario.strategy.bits is None:
        zeta_val = float(n)
    elif strat == "eigen_deterministic" and scenario.strategy.bits is None:
        h1 = los_bs_irs(n, scenario.spacing, _los_angle(scenario))
        corr = exp_correlation(n, scenario.fading.correlation_eta)
        zeta_val = scaling.zeta(scaling.r_bar(h1, corr)).zeta
    else:
        return None
    refs = []
    for t in trials:
        budgets = [
            scaling.LinkBudget(
                power_p=scenario.power_w,
                noise_var=scenario.noise_var_w,
                alpha=scenario.alpha,
                beta_r=br,
                beta_d=bd,
            )
            for br, bd in zip(t.beta_r, t.beta_d)
        ]
        per_user = [scaling.scaling_law(scenario.n_users, zeta_val, lb) for lb in budgets]
        refs.append(float(np.mean(per_user)))
    return float(np.mean(refs))


def _aggregate(scenario: Scenario, trials: list, keep_trials: bool) -> ResultRow:
    rates = np.array([t.sum_rate for t in trials])
    stderr = float(rates.std(ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else 0.0
    thr_min = float(np.mean([t.throughputs.min() for t in trials]))
    thr_mean = float(np.mean([t.throughputs.mean() for t in trials]))
    thr_max = float(np.mean([t.throughputs.max() for t in trials]))
    return ResultRow(
        scenario_id=scenario.scenario_id,
        n_users=scenario.n_users,
        n_elements=scenario.n_elements,
        strategy=scenario.strategy.label,
        scheduler=scenario.scheduler.label,
        eta=scenario.eta,
        sum_rate=float(rates.mean()),
        stderr=stderr,
        analytic_ref=_analytic_reference(scenario, trials),
        seed=scenario.seed,
        throughput_summary=(thr_min, thr_mean, thr_max),
        trials=trials if keep_trials else None,
    )


def run_experiment(
    scenarios, workers: int = 1, keep_trials: bool = False, progress=None
) -> list:
    """Execute one scenario or a sweep; returns one ResultRow per scenario.

    ``workers`` > 1 runs trials in a process pool.  Aggregation is keyed by
    trial index, so the output is identical either way.
    """
    if isinstance(scenarios, Scenario):
        scenarios = [scenarios]
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for scenario in scenarios:
                futures = [pool.submit(run_trial, scenario, t) for t in range(scenario.trials)]
                trials = [f.result() for f in futures]
                trials.sort(key=lambda s: s.trial)
                rows.append(_aggregate(scenario, trials, keep_trials))
                if progress is not None:
                    progress(scenario, rows[-1])
    else:
        for scenario in scenarios:
            trials = [run_trial(scenario, t) for t in range(scenario.trials)]
            rows.append(_aggregate(scenario, trials, keep_trials))
            if progress is not None:
                progress(scenario, rows[-1])
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _row_values(row: ResultRow) -> dict:
    return {
        "scenario_id": row.scenario_id,
        "K": row.n_users,
        "N": row.n_elements,
        "strategy": row.strategy,
        "scheduler": row.scheduler,
        "eta": row.eta,
        "sum_rate": row.sum_rate,
        "stderr": row.stderr,
        "analytic_ref": row.analytic_ref,
        "seed": row.seed,
    }


def emit_results(rows, fmt: str = "csv") -> str:
    """Render result rows as CSV (fixed column order) or JSON lines."""
    if not rows:
        raise ValueError("no result rows to emit")
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            values = _row_values(row)
            buf.write(",".join(_fmt(values[c]) for c in CSV_COLUMNS) + "\n")
        return buf.getvalue()
    if fmt == "jsonl":
        lines = []
        for row in rows:
            values = _row_values(row)
            out = {
                c: (float(f"{v:.6g}") if isinstance(v, float) else v)
                for c, v in ((c, values[c]) for c in CSV_COLUMNS)
            }
            lines.append(json.dumps(out))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown output format {fmt!r}; use 'csv' or 'jsonl'")


def write_results(rows, path, fmt: str = "csv") -> None:
    text = emit_results(rows, fmt)
    with open(path, "w") as fh:
        fh.write(text)
