"""Command-line front end: analyze, sweep, simulate, verify.

All computation is exact; decimals in reports and plots are display-only
conversions.  Identical inputs produce byte-identical CSV outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .criteria import (
    AlphaReport,
    CriterionOutcome,
    Verdict,
    alpha_advanced,
    alpha_retarded,
    evaluate_all,
    evaluate_criterion,
)
from .equations import (
    Direction,
    EquationError,
    EquationSpec,
    HypothesisReport,
    check_hypotheses,
    collect_parameters,
    equation_from_json,
)
from .numerics import DEFAULT_MAX_PRECISION_BITS, decimal_str, format_rational, parse_rational
from .simulate import (
    InitialData,
    SimulationError,
    Trace,
    default_settle,
    detect_oscillation,
    load_certificate,
    random_initial_data,
    read_trace_csv,
    solve_advanced,
    solve_retarded,
    verify_periodic_solution,
    verify_trace,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID = 2

SWEEP_CSV_HEADER = ["param", "criterion", "verdict", "value"]


def _fmt_value(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, Fraction):
        return format_rational(value)
    return str(value)


def _fmt_value_full(value) -> str:
    if isinstance(value, Fraction):
        return f"{format_rational(value)} ({decimal_str(value)})"
    return _fmt_value(value)


@dataclass
class Report:
    eq: EquationSpec
    hypotheses: HypothesisReport
    alpha: AlphaReport
    outcomes: list[CriterionOutcome]

    @property
    def proven(self) -> bool:
        return any(o.verdict is Verdict.OSCILLATORY_PROVEN for o in self.outcomes)

    @property
    def proving_criteria(self) -> list[str]:
        return [o.criterion_id for o in self.outcomes if o.verdict is Verdict.OSCILLATORY_PROVEN]

    def text_lines(self) -> list[str]:
        eq = self.eq
        hyp = self.hypotheses
        lines = [
            f"equation: {eq.direction.value}, terms={eq.m}, horizon={eq.horizon}",
            "hypotheses:",
            f"  arguments tend to infinity: {'yes' if hyp.arguments_tend_to_infinity else 'no'}",
        ]
        if hyp.bounded_deviations:
            bounds = ", ".join(str(b) for b in hyp.deviation_bounds)
            lines.append(f"  deviations bounded: yes (per-term bounds [{bounds}])")
        else:
            lines.append("  deviations bounded: no")
        lines.append(
            f"  coefficient sums stay below 1: {'yes' if hyp.coeff_sum_below_one else 'no'}"
        )
        if hyp.unit_sum_witnesses:
            recurring = "recur periodically" if hyp.unit_sum_infinite else "finitely many"
            lines.append(
                f"  unit-sum witnesses: {list(hyp.unit_sum_witnesses)} ({recurring})"
            )
        else:
            lines.append("  unit-sum witnesses: none")
        if eq.direction is Direction.RETARDED:
            lines.append(f"  initial segment depth w: {hyp.initial_depth}")
        per_term = ", ".join(format_rational(a) for a in self.alpha.per_term)
        lines.append(
            f"alpha: per-term [{per_term}], alpha = {_fmt_value_full(self.alpha.alpha)}, "
            f"alpha < 1/e: {self.alpha.in_range_inv_e.outcome.value}"
        )
        lines.append("criteria:")
        for outcome in self.outcomes:
            lines.append(
                f"  {outcome.criterion_id:<10} {outcome.verdict.value:<24}"
                f" value={_fmt_value_full(outcome.extremal_value)}"
                f" threshold={outcome.threshold_description}"
                + ("" if outcome.exact else " [windowed]")
            )
            for bound in outcome.per_term:
                status = {True: "holds", False: "fails", None: "undecided"}[bound.satisfied]
                lines.append(
                    f"      term {bound.term}: {_fmt_value_full(bound.value)}"
                    f" vs {bound.threshold_text}"
                    + (f" = {_fmt_value_full(bound.threshold_value)}" if bound.threshold_value is not None else "")
                    + f" -> {status}"
                )
            for note in outcome.notes:
                lines.append(f"      note: {note}")
        if self.proven:
            lines.append(f"overall: OSCILLATION PROVEN via {', '.join(self.proving_criteria)}")
        else:
            lines.append("overall: oscillation not proven")
        return lines

    def csv_rows(self) -> list[list[str]]:
        rows = [["criterion", "verdict", "value", "value_decimal", "threshold", "exact"]]
        for o in self.outcomes:
            decimal = (
                decimal_str(o.extremal_value) if isinstance(o.extremal_value, Fraction) else ""
            )
            rows.append([
                o.criterion_id,
                o.verdict.value,
                _fmt_value(o.extremal_value),
                decimal,
                o.threshold_description,
                "1" if o.exact else "0",
            ])
        return rows


def _parse_param_bindings(entries: Optional[Sequence[str]]) -> dict[str, Fraction]:
    bindings: dict[str, Fraction] = {}
    for entry in entries or ():
        name, sep, raw = entry.partition("=")
        if not sep or not name:
            raise EquationError(f"--param expects NAME=VALUE, got {entry!r}")
        bindings[name] = parse_rational(raw)
    return bindings


def _load_document(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise EquationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise EquationError(f"{path} is not valid JSON: {exc}") from None


def _build_report(eq: EquationSpec, args) -> Report:
    hyp = check_hypotheses(eq)
    outcomes = evaluate_all(
        eq,
        r_max=args.r_max,
        max_precision_bits=args.max_precision_bits,
        nonstrict=args.nonstrict,
    )
    alpha = (
        alpha_retarded(eq, max_precision_bits=args.max_precision_bits)
        if eq.direction is Direction.RETARDED
        else alpha_advanced(eq, max_precision_bits=args.max_precision_bits)
    )
    return Report(eq, hyp, alpha, outcomes)


def _emit_report(report: Report, args) -> None:
    if args.format == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerows(report.csv_rows())
    else:
        print("\n".join(report.text_lines()))
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.format == "csv":
            with open(out_dir / "report.csv", "w", newline="") as handle:
                csv.writer(handle).writerows(report.csv_rows())
        else:
            (out_dir / "report.txt").write_text("\n".join(report.text_lines()) + "\n")


def cmd_analyze(args) -> int:
    params = _parse_param_bindings(args.param)
    doc = _load_document(args.equation)
    missing = collect_parameters(doc) - set(params)
    if missing:
        raise EquationError(f"unbound parameters: {sorted(missing)} (bind with --param NAME=VALUE)")
    eq = equation_from_json(doc, params=params or None, horizon_override=args.horizon)
    report = _build_report(eq, args)
    _emit_report(report, args)
    if args.expect:
        expected = args.expect == "oscillatory"
        if expected != report.proven:
            print(
                f"expectation mismatch: expected {args.expect}, "
                f"got {'oscillatory (proven)' if report.proven else 'not proven'}",
                file=sys.stderr,
            )
            return EXIT_MISMATCH
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc = _load_document(args.equation)
    names = collect_parameters(doc)
    if args.sweep_param not in names:
        raise EquationError(
            f"parameter {args.sweep_param!r} is not declared in the input file "
            f"(found: {sorted(names) or 'none'})"
        )
    start = parse_rational(args.start)
    stop = parse_rational(args.stop)
    step = parse_rational(args.step)
    if step <= 0:
        raise EquationError("--step must be positive")
    criteria = [c.strip() for c in args.criteria.split(",")] if args.criteria else ["T2.4(1)"]

    rows: list[list[str]] = []
    verdicts: dict[str, list[tuple[Fraction, str]]] = {c: [] for c in criteria}
    value = start
    while value <= stop:
        eq = equation_from_json(doc, params={args.sweep_param: value},
                                horizon_override=args.horizon)
        for criterion_id in criteria:
            outcome = evaluate_criterion(
                eq, criterion_id,
                max_precision_bits=args.max_precision_bits,
                nonstrict=args.nonstrict,
            )
            rows.append([
                format_rational(value),
                criterion_id,
                outcome.verdict.value,
                _fmt_value(outcome.extremal_value),
            ])
            verdicts[criterion_id].append((value, outcome.verdict.value))
        value += step

    out_dir = Path(args.out_dir) if args.out_dir else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SWEEP_CSV_HEADER)
        writer.writerows(rows)

    print(f"swept {args.sweep_param} over [{start}, {stop}] step {step}: {sweep_path}")
    for criterion_id in criteria:
        history = verdicts[criterion_id]
        transitions = [
            (history[k - 1], history[k])
            for k in range(1, len(history))
            if history[k - 1][1] != history[k][1]
        ]
        if not transitions:
            print(f"  {criterion_id}: no verdict transition")
        for (prev_value, prev_verdict), (cur_value, cur_verdict) in transitions:
            print(
                f"  {criterion_id}: {prev_verdict} -> {cur_verdict} between "
                f"{format_rational(prev_value)} and {format_rational(cur_value)}"
            )
    return EXIT_OK


def _parse_window(text: str) -> tuple[int, int]:
    sep = ":" if ":" in text else ","
    lo_text, _, hi_text = text.partition(sep)
    try:
        lo, hi = int(lo_text), int(hi_text)
    except ValueError:
        raise SimulationError(f"window must be 'lo:hi', got {text!r}") from None
    if lo >= hi:
        raise SimulationError(f"window must satisfy lo < hi, got {text!r}")
    return lo, hi


def _plot_traces(traces: dict[str, Trace], window: tuple[int, int], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    lo, hi = window
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, trace in traces.items():
        xs = [n for n in range(max(lo, trace.start), min(hi, trace.end) + 1)]
        ys = [float(trace.value_at(n)) for n in xs]
        ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=0.9, label=label)
    ax.axhline(0.0, color="black", linewidth=0.7)
    ax.set_xlabel("n")
    ax.set_ylabel("x(n)")
    ax.set_title(f"solutions on [{lo}, {hi}]")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_simulate(args) -> int:
    params = _parse_param_bindings(args.param)
    doc = _load_document(args.equation)
    missing = collect_parameters(doc) - set(params)
    if missing:
        raise EquationError(f"unbound parameters: {sorted(missing)} (bind with --param NAME=VALUE)")
    eq = equation_from_json(doc, params=params or None, horizon_override=args.horizon)
    upto = args.upto if args.upto is not None else eq.horizon
    if upto > eq.horizon:
        # The periodic rules are total, so a larger window only extends the tables.
        eq = equation_from_json(doc, params=params or None, horizon_override=upto)

    traces: dict[str, Trace] = {}
    if args.init:
        raw = _load_document(args.init)
        mapping = raw.get("values", raw)
        if not isinstance(mapping, dict):
            raise SimulationError("--init file must map indices to rationals")
        data = InitialData.from_mapping(
            {int(k): parse_rational(v) for k, v in mapping.items()}
        )
        traces["init"] = (
            solve_retarded(eq, data, upto)
            if eq.direction is Direction.RETARDED
            else solve_advanced(eq, data, 0)
        )
    for seed in args.seed or ():
        data = random_initial_data(eq, seed, upto)
        traces[f"seed{seed}"] = (
            solve_retarded(eq, data, upto)
            if eq.direction is Direction.RETARDED
            else solve_advanced(eq, data, 0)
        )
    if not traces:
        raise SimulationError("no initial data: pass --init FILE or --seed N")

    out_dir = Path(args.out_dir) if args.out_dir else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    settle = args.settle if args.settle is not None else default_settle(eq)
    for label, trace in sorted(traces.items()):
        trace_path = out_dir / f"trace_{label}.csv"
        write_trace_csv(trace, trace_path)
        evidence = detect_oscillation(trace, settle)
        changes = len(evidence.sign_changes_beyond_settle)
        print(
            f"{label}: window [{trace.start}, {trace.end}], {evidence.kind.value}, "
            f"{changes} sign changes beyond n={settle} -> {trace_path}"
        )

    if args.plot:
        windows = [_parse_window(w) for w in (args.window or ())]
        if not windows:
            windows = [(traces[min(traces)].start, upto)]
        for lo, hi in windows:
            plot_path = out_dir / f"plot_{lo}_{hi}.svg"
            _plot_traces(traces, (lo, hi), plot_path)
            print(f"plot [{lo}, {hi}] -> {plot_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    params = _parse_param_bindings(args.param)
    doc = _load_document(args.equation)
    missing = collect_parameters(doc) - set(params)
    if missing:
        raise EquationError(f"unbound parameters: {sorted(missing)} (bind with --param NAME=VALUE)")
    eq = equation_from_json(doc, params=params or None, horizon_override=args.horizon)
    if bool(args.certificate) == bool(args.trace):
        raise SimulationError("pass exactly one of --certificate FILE or --trace FILE")
    if args.certificate:
        cert = load_certificate(args.certificate)
        result = verify_periodic_solution(eq, cert)
        if result.verified:
            sign_text = {1: "positive", -1: "negative", 0: "mixed-sign"}[result.constant_sign]
            extra = " (degenerate: identically zero)" if result.degenerate else ""
            print(
                f"certificate verified through n={result.checked_through}; "
                f"period values are {sign_text}{extra}"
            )
            if result.constant_sign != 0 and not result.degenerate:
                print("this proves existence of a nonoscillatory solution")
            return EXIT_OK
        where = f" at n={result.failing_index}" if result.failing_index is not None else ""
        print(f"certificate FAILED{where}: {result.reason}")
        return EXIT_MISMATCH
    trace = read_trace_csv(args.trace)
    result = verify_trace(eq, trace)
    if result.verified:
        print(f"trace residuals vanish at every checkable index (last n={result.checked_through})")
        return EXIT_OK
    where = f" at n={result.failing_index}" if result.failing_index is not None else ""
    print(f"trace verification FAILED{where}: {result.reason}")
    return EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscdiff",
        description="Oscillation analysis for difference equations with deviating arguments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("equation", help="equation description file (JSON)")
        p.add_argument("--horizon", type=int, default=None, help="override the analysis horizon")
        p.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="bind a symbolic coefficient parameter")
        p.add_argument("--max-precision-bits", type=int, default=DEFAULT_MAX_PRECISION_BITS,
                       help="precision ceiling for threshold enclosures")
        p.add_argument("--nonstrict", action="store_true",
                       help="accept boundary liminf cases via interval lower bounds")
        p.add_argument("--out-dir", default=None, help="directory for emitted files")

    p_analyze = sub.add_parser("analyze", help="run hypothesis checks and all criteria")
    common(p_analyze)
    p_analyze.add_argument("--r-max", type=int, default=8, help="iteration depth ceiling")
    p_analyze.add_argument("--expect", choices=["oscillatory", "inconclusive"],
                           help="exit 1 unless the overall verdict matches")
    p_analyze.add_argument("--format", choices=["text", "csv"], default="text")

    p_sweep = sub.add_parser("sweep", help="scan a coefficient parameter over a rational grid")
    common(p_sweep)
    p_sweep.add_argument("--sweep-param", required=True, metavar="NAME",
                         help="parameter declared as $NAME in the input file")
    p_sweep.add_argument("--from", dest="start", required=True, help="grid start (rational)")
    p_sweep.add_argument("--to", dest="stop", required=True, help="grid end (rational)")
    p_sweep.add_argument("--step", required=True, help="grid step (rational)")
    p_sweep.add_argument("--criteria", default=None,
                         help="comma-separated criterion ids, e.g. 'T2.4(3),T2.5(3)'")

    p_sim = sub.add_parser("simulate", help="solve exactly and export traces/plots")
    common(p_sim)
    p_sim.add_argument("--init", default=None, help="JSON file with initial values")
    p_sim.add_argument("--seed", type=int, action="append",
                       help="seeded pseudorandom initial data (repeatable)")
    p_sim.add_argument("--upto", type=int, default=None, help="solve up to this index")
    p_sim.add_argument("--settle", type=int, default=None,
                       help="ignore sign activity before this index")
    p_sim.add_argument("--plot", action="store_true", help="emit SVG plots")
    p_sim.add_argument("--window", action="append", metavar="LO:HI",
                       help="plot window (repeatable)")

    p_verify = sub.add_parser("verify", help="check a certificate or trace against the equation")
    common(p_verify)
    p_verify.add_argument("--certificate", default=None, help="periodic-solution certificate JSON")
    p_verify.add_argument("--trace", default=None, help="trace CSV to re-check")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "analyze": cmd_analyze,
        "sweep": cmd_sweep,
        "simulate": cmd_simulate,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (EquationError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
