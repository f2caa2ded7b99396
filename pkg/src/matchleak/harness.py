"""Experiment runner: seeded trials, post-hoc verification, bound checks,
CSV/JSONL emission, and the all-scenarios bench table.

Every trial derives its own generator from (master_seed, trial index), so a
fixed configuration reproduces identical records and identical output bytes.
Wall time is measured per trial but written as 0 in canonical output to keep
files byte-deterministic; pass include_timing=True to emit the measurement.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import attacks
from .attacks import AttackOutcome, PartialTemplate, SearchStrategy
from .bounds import coupon_bracket, worst_case_queries
from .covering import greedy_cover
from .errors import InternalError, UsageError
from .oracle import ClientModel, LeakageMode, Oracle, Payload, Scope, SessionShape
from .space import SpaceParams, hamming_distance, sample_template

ATTACK_MODES: dict[str, LeakageMode] = {
    "below_distance": LeakageMode(Scope.BELOW_ONLY, Payload.DISTANCE),
    "below_positions": LeakageMode(Scope.BELOW_ONLY, Payload.POSITIONS),
    "below_posvalues": LeakageMode(Scope.BELOW_ONLY, Payload.POSITIONS_VALUES),
    "minimal": LeakageMode(Scope.ALWAYS, Payload.NONE),
    "both_distance": LeakageMode(Scope.ALWAYS, Payload.DISTANCE),
    "both_positions": LeakageMode(Scope.ALWAYS, Payload.POSITIONS),
    "both_posvalues": LeakageMode(Scope.ALWAYS, Payload.POSITIONS_VALUES),
    "accumulation": LeakageMode(Scope.BELOW_ONLY, Payload.POSITIONS_VALUES),
    "fault_control": LeakageMode(Scope.BELOW_ONLY, Payload.POSITIONS_VALUES),
}

BINARY_ONLY = {"minimal", "accumulation", "fault_control"}
NEEDS_EPS_BELOW_N = {"below_distance", "below_positions", "below_posvalues", "minimal"}
NEEDS_EPS_POSITIVE = {"accumulation", "fault_control"}
PASSIVE = {"accumulation", "fault_control"}

CSV_COLUMNS = ("trial", "seed", "queries", "sessions", "exact", "within_ball", "bound", "bound_ok", "ms")


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    q: int
    n: int
    epsilon: int
    attack: str
    scope: str | None = None          # validated against the attack's required mode
    payload: str | None = None
    trials: int = 100
    master_seed: int = 0
    strategy: str = "fixing"          # minimal-leak search phase
    alpha: float | None = None        # rarest-coordinate exponent; None = uniform client
    session_shape: str = "single"
    workers: int = 1
    out_format: str = "csv"
    out_path: str | None = None       # records written here (canonical bytes) when set


@dataclass(frozen=True, slots=True)
class TrialRecord:
    trial: int
    seed: int
    queries: int
    sessions: int
    exact: int
    within_ball: int
    bound: float | int
    bound_ok: int
    ms: int


def validate_config(config: ExperimentConfig) -> tuple[SpaceParams, LeakageMode]:
    """Resolve and sanity-check a configuration before any trial runs."""
    if config.attack not in ATTACK_MODES:
        known = ", ".join(sorted(ATTACK_MODES))
        raise UsageError(f"unknown attack {config.attack!r}; expected one of: {known}")
    params = SpaceParams(config.q, config.n, config.epsilon)
    mode = ATTACK_MODES[config.attack]
    if config.scope is not None or config.payload is not None:
        if config.scope is None or config.payload is None:
            raise UsageError("scope and payload must be given together")
        wanted = LeakageMode.parse(config.scope, config.payload)
        if wanted != mode:
            raise UsageError(
                f"attack {config.attack!r} requires mode ({mode.scope.value}, {mode.payload.value}), "
                f"got ({wanted.scope.value}, {wanted.payload.value})"
            )
    if config.attack in BINARY_ONLY and params.q != 2:
        raise UsageError(f"attack {config.attack!r} needs q = 2")
    if config.attack in NEEDS_EPS_BELOW_N and params.epsilon >= params.n:
        raise UsageError(f"attack {config.attack!r} needs epsilon < n")
    if config.attack in NEEDS_EPS_POSITIVE and params.epsilon < 1:
        raise UsageError(f"attack {config.attack!r} needs epsilon >= 1")
    if config.trials < 1:
        raise UsageError("trials must be >= 1")
    if config.workers < 1:
        raise UsageError("workers must be >= 1")
    if config.strategy not in ("fixing", "greedy"):
        raise UsageError("strategy must be 'fixing' or 'greedy'")
    if config.alpha is not None and config.alpha < 1.0:
        raise UsageError("alpha must be >= 1")
    if config.session_shape not in ("single", "multi"):
        raise UsageError("session shape must be 'single' or 'multi'")
    if config.out_format not in ("csv", "jsonl"):
        raise UsageError("output format must be 'csv' or 'jsonl'")
    return params, mode


def client_for(config: ExperimentConfig, params: SpaceParams) -> ClientModel:
    shape = SessionShape(config.session_shape)
    if config.alpha is None:
        return ClientModel.uniform(params.n, shape)
    return ClientModel.rare_first(params.n, config.alpha, shape)


@lru_cache(maxsize=32)
def _greedy_cover_size(q: int, n: int, epsilon: int) -> int:
    return len(greedy_cover(SpaceParams(q, n, epsilon)))


def attack_bound(config: ExperimentConfig, params: SpaceParams) -> float | int:
    """Per-trial bound checked by the harness.

    Active attacks: worst-case queries.  Fault-controlled collection:
    ceil(n/eps) sessions.  Accumulation: the upper end of the expected-
    session bracket; the meaningful check there is the summary-level mean,
    so per-trial bound_ok is informational only.
    """
    if config.attack == "accumulation":
        client = client_for(config, params)
        _, hi = coupon_bracket(len(client.variable_positions()), client.min_prob())
        return hi
    if config.attack == "fault_control":
        return math.ceil(params.n / params.epsilon)
    if config.attack == "minimal" and config.strategy == "greedy":
        size = _greedy_cover_size(params.q, params.n, params.epsilon)
        return size + params.n + 2 * params.epsilon + 1
    bound = worst_case_queries(params, ATTACK_MODES[config.attack])
    if bound is None:
        raise UsageError(f"no worst-case bound applies to {config.attack!r} at q={params.q}")
    return bound


def _execute(config: ExperimentConfig, oracle: Oracle, rng: np.random.Generator) -> AttackOutcome:
    a = config.attack
    if a == "below_distance":
        return attacks.attack_below_distance(oracle)
    if a == "below_positions":
        return attacks.attack_below_positions(oracle)
    if a == "below_posvalues":
        return attacks.attack_below_positions_values(oracle)
    if a == "minimal":
        return attacks.attack_minimal_binary(oracle, SearchStrategy(config.strategy))
    if a == "both_distance":
        return attacks.attack_both_distance(oracle)
    if a == "both_positions":
        return attacks.attack_both_positions(oracle)
    if a == "both_posvalues":
        return attacks.attack_both_positions_values(oracle)
    if a == "accumulation":
        return attacks.accumulation_collect(oracle, client_for(config, oracle.params), rng)
    if a == "fault_control":
        return attacks.fault_controlled_collect(oracle)
    raise UsageError(f"unknown attack {a!r}")


def trial_seed(master_seed: int, trial: int) -> int:
    """Stable 64-bit seed for one trial, derived from the master seed."""
    ss = np.random.SeedSequence([master_seed, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _verify_outcome(oracle: Oracle, outcome: AttackOutcome, params: SpaceParams) -> tuple[int, int]:
    """Check the outcome against the sealed secret (the only audit read).

    Returns (exact, within_ball) as verified facts; a false claim aborts the
    run with a diagnostic rather than producing a polluted record.
    """
    secret = oracle.audit_secret()
    recovered = outcome.recovered
    if isinstance(recovered, PartialTemplate):
        for i, c in enumerate(recovered.coords):
            if c is not None and c != secret[i]:
                raise InternalError(
                    f"verification failed: recovered coordinate {i + 1} is {c}, secret has {secret[i]}"
                )
        exact = int(recovered.known_count() == params.n)
        guess = outcome.ball_guess
        within = int(guess is not None and hamming_distance(guess, secret) <= params.epsilon)
    else:
        exact = int(tuple(recovered) == secret)
        within = int(hamming_distance(recovered, secret) <= params.epsilon)
    if outcome.exact_recovery and not exact:
        raise InternalError("verification failed: attack claimed exact recovery but missed")
    if outcome.within_ball and not within:
        raise InternalError("verification failed: attack claimed a within-ball recovery but missed")
    return exact, within


def run_trial(
    config: ExperimentConfig,
    trial: int,
    bound: float | int | None = None,
    on_response: Callable | None = None,
    on_observation: Callable | None = None,
) -> TrialRecord:
    params, mode = validate_config(config)
    if bound is None:
        bound = attack_bound(config, params)
    seed = trial_seed(config.master_seed, trial)
    rng = np.random.default_rng(seed)
    secret = sample_template(params, rng)
    oracle = Oracle(secret, params, mode, on_response=on_response, on_observation=on_observation)
    t0 = time.perf_counter_ns()
    outcome = _execute(config, oracle, rng)
    ms = (time.perf_counter_ns() - t0) // 1_000_000
    if oracle.audit_count != 0:
        raise InternalError("attack read the secret outside the query interface")
    exact, within = _verify_outcome(oracle, outcome, params)
    if outcome.queries_used != oracle.query_count:
        raise InternalError("attack under- or over-reported its query count")
    if config.attack == "accumulation":
        bound_ok = 1  # bracket applies to the mean; checked in the summary
    elif config.attack == "fault_control":
        bound_ok = int(outcome.sessions_used <= bound)
    else:
        bound_ok = int(outcome.queries_used <= bound)
    return TrialRecord(
        trial=trial,
        seed=seed,
        queries=outcome.queries_used,
        sessions=outcome.sessions_used,
        exact=exact,
        within_ball=within,
        bound=bound,
        bound_ok=bound_ok,
        ms=int(ms),
    )


def _pool_trial(args: tuple[ExperimentConfig, int, float | int]) -> TrialRecord:
    config, trial, bound = args
    return run_trial(config, trial, bound)


def run_experiment(
    config: ExperimentConfig,
    on_response: Callable | None = None,
    on_observation: Callable | None = None,
) -> tuple[list[TrialRecord], dict]:
    """Run all trials and summarize.

    Records come back in trial order regardless of worker scheduling, and
    are identical for a fixed configuration no matter the worker count.
    Audit taps (on_response/on_observation) require a single worker.
    """
    params, _mode = validate_config(config)
    bound = attack_bound(config, params)
    if config.workers > 1:
        if on_response is not None or on_observation is not None:
            raise UsageError("audit taps require workers = 1")
        jobs = [(config, t, bound) for t in range(config.trials)]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_pool_trial, jobs))
    else:
        records = [
            run_trial(config, t, bound, on_response, on_observation)
            for t in range(config.trials)
        ]
    if config.out_path is not None:
        emit(records, config.out_format, config.out_path)
    return records, summarize(config, params, records)


def summarize(config: ExperimentConfig, params: SpaceParams, records: list[TrialRecord]) -> dict:
    queries = [r.queries for r in records]
    sessions = [r.sessions for r in records]
    summary = {
        "attack": config.attack,
        "q": params.q,
        "n": params.n,
        "epsilon": params.epsilon,
        "trials": len(records),
        "master_seed": config.master_seed,
        "queries_min": min(queries),
        "queries_mean": sum(queries) / len(records),
        "queries_max": max(queries),
        "sessions_mean": sum(sessions) / len(records),
        "sessions_max": max(sessions),
        "bound": records[0].bound if records else None,
        "violations": sum(1 for r in records if not r.bound_ok),
        "exact_failures": sum(1 for r in records if not r.exact),
        "not_within_ball": sum(1 for r in records if not r.within_ball),
        "mean_ms": sum(r.ms for r in records) / len(records),
    }
    if config.attack == "accumulation":
        client = client_for(config, params)
        lo, hi = coupon_bracket(len(client.variable_positions()), client.min_prob())
        mean = summary["sessions_mean"]
        summary["bracket_lo"] = lo
        summary["bracket_hi"] = hi
        summary["bracket_ok"] = int(lo <= mean <= hi)
        # the partial template is a privacy break even when incomplete;
        # exactness is only expected when every coordinate is variable
        if len(client.variable_positions()) == params.n:
            summary["ok"] = bool(summary["bracket_ok"] and summary["exact_failures"] == 0)
        else:
            summary["ok"] = bool(summary["bracket_ok"])
    else:
        summary["ok"] = bool(summary["violations"] == 0 and summary["exact_failures"] == 0)
    return summary


# --- record emission -----------------------------------------------------------


def _format_bound(value: float | int) -> str:
    return str(value) if isinstance(value, int) else repr(value)


def emit(
    records: Iterable[TrialRecord],
    fmt: str,
    path: str | Path,
    include_timing: bool = False,
) -> None:
    """Write records as CSV or JSONL.

    Output bytes are deterministic for a fixed configuration: the measured
    per-trial wall time is replaced by 0 unless include_timing is set.
    Files always end with a newline; an empty record list yields a
    header-only CSV (or an empty JSONL).
    """
    if fmt not in ("csv", "jsonl"):
        raise UsageError(f"unknown output format {fmt!r}")
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.trial,
                    r.seed,
                    r.queries,
                    r.sessions,
                    r.exact,
                    r.within_ball,
                    _format_bound(r.bound),
                    r.bound_ok,
                    r.ms if include_timing else 0,
                ]
            )
    else:
        for r in records:
            doc = {
                "trial": r.trial,
                "seed": r.seed,
                "queries": r.queries,
                "sessions": r.sessions,
                "exact": r.exact,
                "within_ball": r.within_ball,
                "bound": r.bound,
                "bound_ok": r.bound_ok,
                "ms": r.ms if include_timing else 0,
            }
            buf.write(json.dumps(doc, separators=(",", ":")))
            buf.write("\n")
    try:
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc


def read_records(path: str | Path, fmt: str) -> list[TrialRecord]:
    """Parse records back; inverse of emit for both formats."""
    text = Path(path).read_text()
    records = []
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(text)))
        if rows and tuple(rows[0]) != CSV_COLUMNS:
            raise UsageError(f"unexpected CSV header {rows[0]!r}")
        for row in rows[1:]:
            vals = dict(zip(CSV_COLUMNS, row))
            bound = float(vals["bound"]) if "." in vals["bound"] or "e" in vals["bound"] else int(vals["bound"])
            records.append(
                TrialRecord(
                    trial=int(vals["trial"]),
                    seed=int(vals["seed"]),
                    queries=int(vals["queries"]),
                    sessions=int(vals["sessions"]),
                    exact=int(vals["exact"]),
                    within_ball=int(vals["within_ball"]),
                    bound=bound,
                    bound_ok=int(vals["bound_ok"]),
                    ms=int(vals["ms"]),
                )
            )
    elif fmt == "jsonl":
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            records.append(TrialRecord(**doc))
    else:
        raise UsageError(f"unknown output format {fmt!r}")
    return records


# --- bench table ------------------------------------------------------------------


BENCH_SCENARIOS: tuple[tuple[str, str], ...] = (
    ("below/distance", "below_distance"),
    ("below/positions", "below_positions"),
    ("below/posvalues", "below_posvalues"),
    ("below/posvalues accumulation", "accumulation"),
    ("both/minimal", "minimal"),
    ("both/distance", "both_distance"),
    ("both/positions", "both_positions"),
    ("both/posvalues", "both_posvalues"),
)

BENCH_COLUMNS = (
    "scenario",
    "attack",
    "trials",
    "bound",
    "max_queries",
    "mean_queries",
    "mean_sessions",
    "violations",
    "exact_failures",
    "ok",
)


@dataclass(frozen=True, slots=True)
class BenchRow:
    scenario: str
    attack: str
    trials: int
    bound: float | int
    max_queries: int
    mean_queries: float
    mean_sessions: float
    violations: int
    exact_failures: int
    ok: int


def bench_table(
    q: int = 2, n: int = 12, epsilon: int = 3, trials: int = 200, master_seed: int = 0
) -> list[BenchRow]:
    """Run every leakage scenario at desk scale, one row per scenario.

    The minimal-leak and accumulation rows need a binary alphabet, so the
    bench as a whole requires q = 2.  All rows share the master seed (and
    therefore the same per-trial secrets).
    """
    if q != 2:
        raise UsageError("the bench table requires q = 2 (minimal and accumulation rows)")
    rows = []
    for scenario, attack in BENCH_SCENARIOS:
        config = ExperimentConfig(
            q=q, n=n, epsilon=epsilon, attack=attack, trials=trials, master_seed=master_seed
        )
        _records, summary = run_experiment(config)
        rows.append(
            BenchRow(
                scenario=scenario,
                attack=attack,
                trials=summary["trials"],
                bound=summary["bound"],
                max_queries=summary["queries_max"],
                mean_queries=summary["queries_mean"],
                mean_sessions=summary["sessions_mean"],
                violations=summary["violations"],
                exact_failures=summary["exact_failures"],
                ok=int(summary["ok"]),
            )
        )
    return rows


def format_bench(rows: list[BenchRow]) -> str:
    header = f"{'scenario':<30} {'attack':<16} {'bound':>12} {'max q':>8} {'mean q':>10} {'mean s':>8} {'viol':>5} {'ok':>3}"
    lines = [header, "-" * len(header)]
    for r in rows:
        bound = f"{r.bound:.2f}" if isinstance(r.bound, float) else str(r.bound)
        lines.append(
            f"{r.scenario:<30} {r.attack:<16} {bound:>12} {r.max_queries:>8} "
            f"{r.mean_queries:>10.2f} {r.mean_sessions:>8.2f} {r.violations:>5} {r.ok:>3}"
        )
    return "\n".join(lines)


def emit_bench(rows: list[BenchRow], fmt: str, path: str | Path) -> None:
    if fmt not in ("csv", "jsonl"):
        raise UsageError(f"unknown output format {fmt!r}")
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(BENCH_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.scenario,
                    r.attack,
                    r.trials,
                    _format_bound(r.bound),
                    r.max_queries,
                    repr(r.mean_queries),
                    repr(r.mean_sessions),
                    r.violations,
                    r.exact_failures,
                    r.ok,
                ]
            )
    else:
        for r in rows:
            doc = {
                "scenario": r.scenario,
                "attack": r.attack,
                "trials": r.trials,
                "bound": r.bound,
                "max_queries": r.max_queries,
                "mean_queries": r.mean_queries,
                "mean_sessions": r.mean_sessions,
                "violations": r.violations,
                "exact_failures": r.exact_failures,
                "ok": r.ok,
            }
            buf.write(json.dumps(doc, separators=(",", ":")))
            buf.write("\n")
    try:
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write bench rows to {path}: {exc}") from exc
