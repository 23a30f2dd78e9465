"""``ringlink`` command line.

    ringlink snr-sweep --scenario S --axis distance|angle|power|symbol|all [--seed N] [--out DIR]
    ringlink pipeline --scenario S [--random-symbols N] [--seed N] [--out DIR]
    ringlink power-report [--scenario S] [--out DIR]
    ringlink validate-config --scenario S

Every command writes its data as CSV or NDJSON (``--format``) plus a PNG.
Exit status is 0 on success, 2 on invalid input or configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import experiments, plots
from .errors import ConfigurationError, ContractViolation, OutOfCalibrationError, ScriptParseError
from .power import TABLE2_HEADER, BatteryModel, DutyCycle, PowerProfile, discharge_trace, duty_load_series
from .power import table3_header, write_table
from .scenario import Scenario, load_scenario

EXIT_OK = 0
EXIT_INVALID = 2


def write_records(path_stem: Path, columns, rows: list[dict], fmt: str) -> Path:
    path = path_stem.with_suffix(".csv" if fmt == "csv" else ".ndjson")
    with path.open("w", newline="") as fp:
        if fmt == "csv":
            w = csv.DictWriter(fp, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
            w.writeheader()
            w.writerows(rows)
        else:
            for r in rows:
                fp.write(json.dumps({k: r[k] for k in columns}) + "\n")
    return path


def _scenario(args) -> Scenario:
    if args.scenario is None:
        raise ConfigurationError("--scenario is required for this command")
    return load_scenario(args.scenario).validate()


def cmd_snr_sweep(args) -> int:
    scenario = _scenario(args)
    axes = experiments.AXES if args.axis == "all" else (args.axis,)
    for axis in axes:
        rows = experiments.run_snr_sweep(axis, scenario, args.seed)
        data = write_records(args.out / f"snr_{axis}", experiments.SNR_COLUMNS, rows, args.format)
        png = plots.plot_snr_sweep(rows, axis, args.out / f"snr_{axis}.png")
        print(f"{axis}: {len(rows)} points -> {data.name}, {png.name}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    scenario = _scenario(args)
    seed = scenario.require_seed(args.seed)
    events = None
    if args.random_symbols:
        events = experiments.random_event_script(args.random_symbols, seed)
    result = experiments.run_pipeline(scenario, seed, events)
    ev_rows = [{"t": e.frame_timestamp, "symbol": e.symbol.value, "confidence": e.confidence}
               for e in result.events]
    act_rows = [{"t": a.t, "action": a.action, "dx": a.dx, "dy": a.dy} for a in result.actions]
    write_records(args.out / "decoded_events", ("t", "symbol", "confidence"), ev_rows, args.format)
    write_records(args.out / "host_actions", ("t", "action", "dx", "dy"), act_rows, args.format)
    report = result.report
    with (args.out / "confusion.csv").open("w", newline="") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(("sent", *report.col_labels))
        for lab, row in zip(report.row_labels, report.confusion.tolist()):
            w.writerow((lab, *row))
    summary = {"scenario": scenario.name, "seed": seed, **result.extra, **report.to_dict()}
    (args.out / "accuracy.json").write_text(json.dumps(summary, indent=2) + "\n")
    plots.plot_confusion(report, args.out / "confusion.png")
    print(f"{scenario.name}: {report.n} frames, accuracy {report.accuracy:.4f}")
    return EXIT_OK


def cmd_power_report(args) -> int:
    if args.scenario is not None:
        sc = load_scenario(args.scenario)
        capacities, duties = sc.capacities_mah, sc.duties_h
    else:
        capacities, duties = (20.0, 27.0), (24.0, 8.0, 4.0)
    rep = experiments.run_power_report(capacities, duties)
    with (args.out / "table2_power.csv").open("w", newline="") as fp:
        write_table(fp, TABLE2_HEADER, rep.table2)
    with (args.out / "table3_lifespan.csv").open("w", newline="") as fp:
        write_table(fp, table3_header(capacities), rep.table3)
    (args.out / "power_crosscheck.json").write_text(json.dumps(rep.cross_check, indent=2) + "\n")
    profile, traces = PowerProfile(), {}
    for c in capacities:
        b = BatteryModel(capacity_mah=c)
        for h in duties:
            t, v = discharge_trace(b, duty_load_series(profile, DutyCycle(h), 0.25), 0.25)
            traces[f"{c:g} mAh, {h:g} h/day"] = (t, v)
    plots.plot_discharge(traces, args.out / "discharge.png")
    for row in rep.table3:
        print(", ".join(f"{v:g}" for v in row))
    worst = max((c["relative_difference"] for c in rep.cross_check.values()), default=0.0)
    print(f"24 h/day closed form vs discharge: max relative difference {worst:.4f}")
    return EXIT_OK


def cmd_validate_config(args) -> int:
    if args.scenario is None:
        raise ConfigurationError("--scenario is required for this command")
    sc = load_scenario(args.scenario)
    problems = sc.problems()
    if args.seed is None and sc.seed is None:
        problems.append("no seed in the scenario; commands will need --seed")
    if sc.event_script is not None and not problems:
        from .ring import load_event_script
        load_event_script(sc.event_script)
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{sc.name}: ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="scenario config file")
    common.add_argument("--seed", type=int, help="RNG seed (overrides the scenario's)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--format", choices=("csv", "ndjson"), default="csv")

    parser = argparse.ArgumentParser(prog="ringlink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("snr-sweep", parents=[common], help="SNR over a parameter grid")
    p.add_argument("--axis", choices=(*experiments.AXES, "all"), default="all")
    p.set_defaults(func=cmd_snr_sweep)
    p = sub.add_parser("pipeline", parents=[common], help="replay an event script end to end")
    p.add_argument("--random-symbols", type=int, metavar="N",
                   help="replace the event script with N random symbols, one per reader frame")
    p.set_defaults(func=cmd_pipeline)
    p = sub.add_parser("power-report", parents=[common], help="power and lifespan tables")
    p.set_defaults(func=cmd_power_report)
    p = sub.add_parser("validate-config", parents=[common], help="check a scenario without running it")
    p.set_defaults(func=cmd_validate_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except ScriptParseError as exc:
        print(f"error: event script {exc}", file=sys.stderr)
    except (ConfigurationError, OutOfCalibrationError, ContractViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
