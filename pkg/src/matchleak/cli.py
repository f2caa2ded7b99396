"""Command-line experiment runner.

Subcommands: attack (single experiment), bench (all-scenario table), bounds
(print the cost report), cover (build/export ball covers), accumulate
(passive collection shortcut).  A flat key=value config file can preload any
flag; explicit flags win.  Exit code 0 only when every bound check passes,
2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bounds import theoretical_bounds
from .covering import chvatal_bound, coordinate_fixing_cover, greedy_cover, save_cover, verify_cover
from .errors import CapacityError, UsageError
from .harness import (
    ExperimentConfig,
    bench_table,
    emit,
    emit_bench,
    format_bench,
    run_experiment,
)
from .oracle import LeakageMode, observation_to_json, response_to_json
from .space import SpaceParams

_DEFAULTS = {
    "q": 2,
    "n": 12,
    "epsilon": 3,
    "scope": None,
    "payload": None,
    "attack": None,
    "trials": 100,
    "seed": 0,
    "format": "csv",
    "out": None,
    "workers": 1,
    "alpha": None,
    "session_shape": "single",
    "strategy": "fixing",
    "audit": None,
    "method": "greedy",
    "timing": False,
}

_INT_KEYS = {"q", "n", "epsilon", "trials", "seed", "workers"}
_FLOAT_KEYS = {"alpha"}
_BOOL_KEYS = {"timing"}


def _load_config_file(path: str) -> dict:
    """Flat key=value lines; blank lines and # comments ignored."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            values[key] = int(val)
        elif key in _FLOAT_KEYS:
            values[key] = float(val)
        elif key in _BOOL_KEYS:
            values[key] = val.lower() in ("1", "true", "yes")
        else:
            values[key] = val
    return values


def _resolve(args: argparse.Namespace, key: str):
    """Flag > config file > built-in default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if getattr(args, "_file_values", None) and key in args._file_values:
        return args._file_values[key]
    return _DEFAULTS[key]


def _add_space_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=int, help="alphabet size (default 2)")
    p.add_argument("--n", type=int, help="dimension (default 12)")
    p.add_argument("--epsilon", type=int, help="acceptance threshold (default 3)")
    p.add_argument("--config", help="key=value config file; flags win")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, help="trial count (default 100)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--format", choices=["csv", "jsonl"], help="record format (default csv)")
    p.add_argument("--out", help="write per-trial records here")
    p.add_argument("--workers", type=int, help="parallel trial workers (default 1)")
    p.add_argument("--timing", action="store_const", const=True, help="emit measured wall time (non-deterministic bytes)")


def _add_accumulation_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, help="rarest coordinate errs with probability n**(-alpha)")
    p.add_argument("--session-shape", dest="session_shape", choices=["single", "multi"],
                   help="errors per genuine session: exactly one, or uniform on 1..epsilon")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchleak",
        description="Leakage attacks on a threshold Hamming matcher, with query accounting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="run one attack over fresh random secrets")
    _add_space_options(p_attack)
    _add_run_options(p_attack)
    _add_accumulation_options(p_attack)
    p_attack.add_argument("--attack", help="attack id (e.g. below_distance, both_positions)")
    p_attack.add_argument("--scope", choices=["below", "both"], help="leak scope; validated against the attack")
    p_attack.add_argument("--payload", choices=["none", "distance", "positions", "posvalues"])
    p_attack.add_argument("--strategy", choices=["fixing", "greedy"], help="minimal-leak search phase")
    p_attack.add_argument("--audit", help="append every oracle response/observation as JSON lines")
    p_attack.set_defaults(func=cmd_attack)

    p_bench = sub.add_parser("bench", help="run all eight leakage scenarios and print the table")
    _add_space_options(p_bench)
    _add_run_options(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_bounds = sub.add_parser("bounds", help="print the cost report for a space and mode")
    _add_space_options(p_bounds)
    p_bounds.add_argument("--scope", choices=["below", "both"])
    p_bounds.add_argument("--payload", choices=["none", "distance", "positions", "posvalues"])
    p_bounds.add_argument("--out", help="also write the report as JSON")
    p_bounds.set_defaults(func=cmd_bounds)

    p_cover = sub.add_parser("cover", help="build a ball cover and optionally export it")
    _add_space_options(p_cover)
    p_cover.add_argument("--method", choices=["fixing", "greedy"], help="cover construction (default greedy)")
    p_cover.add_argument("--out", help="export centers as q-ary strings")
    p_cover.set_defaults(func=cmd_cover)

    p_acc = sub.add_parser("accumulate", help="passive accumulation runs (shortcut for attack --attack accumulation)")
    _add_space_options(p_acc)
    _add_run_options(p_acc)
    _add_accumulation_options(p_acc)
    p_acc.set_defaults(func=cmd_accumulate)

    return parser


def _prepare(args: argparse.Namespace) -> None:
    if getattr(args, "config", None):
        args._file_values = _load_config_file(args.config)
    else:
        args._file_values = {}


def _experiment_config(args: argparse.Namespace, attack: str | None = None) -> ExperimentConfig:
    attack = attack or _resolve(args, "attack")
    if not attack:
        raise UsageError("no attack selected (use --attack or a config file)")
    timing = bool(_resolve(args, "timing"))
    out = _resolve(args, "out")
    return ExperimentConfig(
        q=_resolve(args, "q"),
        n=_resolve(args, "n"),
        epsilon=_resolve(args, "epsilon"),
        attack=attack,
        scope=_resolve(args, "scope") if hasattr(args, "scope") else None,
        payload=_resolve(args, "payload") if hasattr(args, "payload") else None,
        trials=_resolve(args, "trials"),
        master_seed=_resolve(args, "seed"),
        strategy=_resolve(args, "strategy") if hasattr(args, "strategy") else "fixing",
        alpha=_resolve(args, "alpha"),
        session_shape=_resolve(args, "session_shape"),
        workers=_resolve(args, "workers"),
        out_format=_resolve(args, "format"),
        out_path=None if timing else out,  # timing output is emitted separately
    )


def _print_summary(summary: dict) -> None:
    for key in (
        "attack", "q", "n", "epsilon", "trials", "bound",
        "queries_min", "queries_mean", "queries_max",
        "sessions_mean", "sessions_max",
        "violations", "exact_failures", "mean_ms",
    ):
        print(f"{key}: {summary[key]}")
    if "bracket_lo" in summary:
        print(f"bracket: [{summary['bracket_lo']:.3f}, {summary['bracket_hi']:.3f}]")
        print(f"bracket_ok: {summary['bracket_ok']}")
    print(f"ok: {int(summary['ok'])}")


def _run_and_report(args: argparse.Namespace, attack: str | None = None) -> int:
    config = _experiment_config(args, attack)
    audit_path = _resolve(args, "audit") if hasattr(args, "audit") else None
    if audit_path:
        with open(audit_path, "w") as sink:
            records, summary = run_experiment(
                config,
                on_response=lambda r: sink.write(response_to_json(r) + "\n"),
                on_observation=lambda o: sink.write(observation_to_json(o) + "\n"),
            )
    else:
        records, summary = run_experiment(config)
    out = _resolve(args, "out")
    if out:
        if bool(_resolve(args, "timing")):
            emit(records, _resolve(args, "format"), out, include_timing=True)
        print(f"records: {out}")
    _print_summary(summary)
    return 0 if summary["ok"] else 1


def cmd_attack(args: argparse.Namespace) -> int:
    _prepare(args)
    return _run_and_report(args)


def cmd_accumulate(args: argparse.Namespace) -> int:
    _prepare(args)
    return _run_and_report(args, attack="accumulation")


def cmd_bench(args: argparse.Namespace) -> int:
    _prepare(args)
    rows = bench_table(
        q=_resolve(args, "q"),
        n=_resolve(args, "n"),
        epsilon=_resolve(args, "epsilon"),
        trials=_resolve(args, "trials"),
        master_seed=_resolve(args, "seed"),
    )
    print(format_bench(rows))
    out = _resolve(args, "out")
    if out:
        emit_bench(rows, _resolve(args, "format"), out)
        print(f"rows: {out}")
    return 0 if all(r.ok for r in rows) else 1


def cmd_bounds(args: argparse.Namespace) -> int:
    _prepare(args)
    params = SpaceParams(_resolve(args, "q"), _resolve(args, "n"), _resolve(args, "epsilon"))
    scope = _resolve(args, "scope") or "below"
    payload = _resolve(args, "payload") or "none"
    report = theoretical_bounds(params, LeakageMode.parse(scope, payload))
    doc = {
        "q": params.q,
        "n": params.n,
        "epsilon": params.epsilon,
        "scope": report.mode.scope.value,
        "payload": report.mode.payload.value,
        "ball_volume": report.ball_volume,
        "naive_search": report.naive_search,
        "greedy_cover_bound": float(report.greedy_cover_bound),
        "greedy_cover_bound_exact": f"{report.greedy_cover_bound.numerator}/{report.greedy_cover_bound.denominator}",
        "entropy_approx": report.entropy_approx,
        "worst_case_queries": report.worst_case_queries,
    }
    for key, val in doc.items():
        print(f"{key}: {'undefined' if val is None else val}")
    out = _resolve(args, "out")
    if out:
        Path(out).write_text(json.dumps(doc, indent=2) + "\n")
        print(f"report: {out}")
    return 0


def cmd_cover(args: argparse.Namespace) -> int:
    _prepare(args)
    params = SpaceParams(_resolve(args, "q"), _resolve(args, "n"), _resolve(args, "epsilon"))
    method = _resolve(args, "method")
    cover = greedy_cover(params) if method == "greedy" else coordinate_fixing_cover(params)
    guarantee = chvatal_bound(params)
    print(f"method: {method}")
    print(f"centers: {len(cover)}")
    print(f"certified: {int(cover.certified)}")
    print(f"greedy_guarantee: {guarantee:.3f}")
    print(f"verified: {int(verify_cover(cover))}")
    out = _resolve(args, "out")
    if out:
        save_cover(cover, out)
        print(f"export: {out}")
    if method == "greedy" and len(cover) > guarantee:
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
