"""Command-line entry point: run/benchmark simulations, zone and MSD calculators, checks.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 check failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import bridge as bridge_mod
from . import kpi as kpi_mod
from .engine import detect_deadlock, ideal_cycle_time, run, run_benchmark
from .scenario import ScenarioError, SimMode, parse_scenario
from .separation import SeparationInputs, compute_msd_dynamic, separation_terms
from .stability import LyapunovSample, StabilityError, evaluate_trace
from .tracefile import (
    TraceFileError,
    emit_profile_data,
    read_trace,
    write_events,
    write_trace,
)
from .zones import SafetyParams, ZoneError, build_zone_layout, compute_msd_static, export_layout

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_CHECK_FAILED = 3
NOISE_AMPLITUDE = 0.005  # m, +-5 mm uniform when enabled


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssmcell",
        description="Deterministic speed-and-separation-monitored cell simulator",
    )
    top = parser.add_subparsers(dest="command", required=True)

    sim = top.add_parser("sim", help="run or benchmark a scenario")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    sim_run = sim_sub.add_parser("run", help="execute one scenario and write the trace")
    sim_run.add_argument("scenario", help="scenario file path")
    sim_run.add_argument("--out", default="out", help="output directory")
    sim_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim_run.add_argument(
        "--noise", action="store_true", help=f"enable +-{NOISE_AMPLITUDE * 1000:.0f} mm range noise"
    )
    sim_run.add_argument("--bridge", default=None, metavar="HOST:PORT", help="publish commands")
    sim_run.add_argument("--decimation", type=int, default=1, help="bridge decimation step")
    sim_bench = sim_sub.add_parser("benchmark", help="run all three control configurations")
    sim_bench.add_argument("scenario")
    sim_bench.add_argument("--out", default="out", help="output directory")
    sim_bench.add_argument("--seed", type=int, default=None)

    zones = top.add_parser("zones", help="zone layout tools")
    zones_sub = zones.add_subparsers(dest="zones_command", required=True)
    zc = zones_sub.add_parser("compute", help="compute the static MSD and zone layout")
    zc.add_argument("--approach-speed", type=float, default=1.6, help="m/s")
    zc.add_argument("--stop-time", type=float, default=0.5, help="s")
    zc.add_argument("--intrusion", type=float, default=0.85, help="m")
    zc.add_argument("--uncertainty", type=float, default=0.1, help="m")
    zc.add_argument("--workspace-length", type=float, default=None, help="m; omit for MSD only")
    zc.add_argument("--workspace-width", type=float, default=0.9, help="m")
    zc.add_argument("--quadrant-half-width", type=float, default=0.425, help="m")
    zc.add_argument("--out", default=None, help="write the layout export to this file")

    msd = top.add_parser("msd", help="separation distance calculators")
    msd_sub = msd.add_subparsers(dest="msd_command", required=True)
    md = msd_sub.add_parser("dynamic", help="dynamic MSD from the seven inputs")
    md.add_argument("--human-speed", type=float, required=True, help="m/s")
    md.add_argument("--robot-speed", type=float, required=True, help="m/s")
    md.add_argument("--robot-reaction-time", type=float, required=True, help="s")
    md.add_argument("--perception-response-time", type=float, required=True, help="s")
    md.add_argument("--intrusion", type=float, required=True, help="m")
    md.add_argument("--robot-uncertainty", type=float, required=True, help="m")
    md.add_argument("--human-uncertainty", type=float, required=True, help="m")

    check = top.add_parser("check", help="post-run verifications")
    check_sub = check.add_subparsers(dest="check_command", required=True)
    cs = check_sub.add_parser("stability", help="energy-decay verdict over a trace file")
    cs.add_argument("trace", help="trace CSV path")
    cs.add_argument("--eps", type=float, default=None, help="derivative tolerance override")
    return parser


def _resolve_scenario(path: str, seed: int | None, noise: bool):
    candidate = Path(path)
    if not candidate.exists():
        from .scenarios import BUILDERS, bundled_scenario_path

        if path in BUILDERS:
            candidate = Path(str(bundled_scenario_path(path)))
        else:
            raise FileNotFoundError(f"no scenario file or bundled scenario named {path!r}")
    scenario = parse_scenario(str(candidate))
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    if noise:
        scenario = replace(scenario, noise=NOISE_AMPLITUDE)
    return scenario


def _write_run_outputs(out_dir: Path, result, label: str = "") -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = f"_{label}" if label else ""
    trace_path = out_dir / f"trace{suffix}.csv"
    meta = {
        "scenario": result.scenario.name,
        "mode": result.scenario.mode.value,
        "seed": result.scenario.seed,
        "control_period": result.scenario.control_period,
        "rows": len(result.trace),
    }
    write_trace(result.trace, trace_path, meta)
    write_events(result.events, out_dir / f"events{suffix}.csv")
    emit_profile_data(result.trace, out_dir / f"profile{suffix}.csv")
    meta_path = out_dir / f"meta{suffix}.txt"
    meta_path.write_text(
        "".join(f"{k}={v}\n" for k, v in meta.items()), encoding="utf-8"
    )
    return trace_path


def _cmd_sim_run(args) -> int:
    scenario = _resolve_scenario(args.scenario, args.seed, args.noise)
    service = None
    if args.bridge:
        host, _, port = args.bridge.rpartition(":")
        service = bridge_mod.serve((host or "127.0.0.1", int(port)), args.decimation)
        print(f"bridge listening on {service.address[0]}:{service.address[1]}")
    try:
        result = run(scenario, bridge=service)
    finally:
        if service is not None:
            service.close()
    result.events.extend(detect_deadlock(result.trace, result.events, scenario.stall_threshold))
    trace_path = _write_run_outputs(Path(args.out), result)
    print(f"wrote {len(result.trace)} rows to {trace_path}")
    print(f"events: {len(result.events)}")
    return EXIT_OK


def _cmd_sim_benchmark(args) -> int:
    scenario = _resolve_scenario(args.scenario, args.seed, False)
    results = run_benchmark(scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ideal = ideal_cycle_time(scenario)
    reports = []
    for mode in (SimMode.AUTONOMOUS, SimMode.TRADITIONAL, SimMode.PROPOSED):
        result = results[mode]
        _write_run_outputs(out_dir, result, label=mode.value)
        report = kpi_mod.report(result, ideal_cycle=ideal)
        reports.append(report)
        lines = [
            f"mode={report.mode_label}",
            f"cycle_time={report.cycle_time!r}",
            f"reaction_time={'undefined' if report.reaction_time is None else repr(report.reaction_time)}",
            f"flexibility_rate={report.flexibility_rate!r}",
            f"oee={report.oee!r}",
        ]
        (out_dir / f"kpi_{mode.value}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    table = kpi_mod.comparison_table(reports)
    (out_dir / "comparison.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return EXIT_OK


def _cmd_zones_compute(args) -> int:
    params = SafetyParams(
        approach_speed=args.approach_speed,
        stop_time=args.stop_time,
        intrusion=args.intrusion,
        uncertainty=args.uncertainty,
    )
    msd = compute_msd_static(params)
    print(f"static_msd_m = {msd:.6f}")
    if args.workspace_length is not None:
        layout = build_zone_layout(
            msd, args.workspace_length, args.workspace_width, args.quadrant_half_width
        )
        text = export_layout(layout)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
            print(f"layout written to {args.out}")
        else:
            print(text, end="")
    return EXIT_OK


def _cmd_msd_dynamic(args) -> int:
    inputs = SeparationInputs(
        human_speed=args.human_speed,
        robot_speed=args.robot_speed,
        robot_reaction_time=args.robot_reaction_time,
        perception_response_time=args.perception_response_time,
        intrusion=args.intrusion,
        robot_uncertainty=args.robot_uncertainty,
        human_uncertainty=args.human_uncertainty,
    )
    s_h, s_r, s_s = separation_terms(inputs)
    print(f"human_travel_m = {s_h:.6f}")
    print(f"robot_travel_m = {s_r:.6f}")
    print(f"robot_stopping_m = {s_s:.6f}")
    print(f"dynamic_msd_m = {compute_msd_dynamic(inputs):.6f}")
    return EXIT_OK


def _cmd_check_stability(args) -> int:
    trace = read_trace(args.trace)
    samples = [LyapunovSample(t=r.t, value=r.lyap, mode=r.mode) for r in trace]
    report = evaluate_trace(samples, eps=args.eps)
    for seg in report.segments:
        print(
            f"segment {seg.t_start:.3f}-{seg.t_end:.3f}s mode={seg.mode.value} "
            f"max_vdot={seg.max_vdot:.3e} converged={seg.converged} "
            f"invariant_set={seg.invariant_set_detected}"
        )
    verdict = "pass" if report.all_converged else "fail"
    print(f"stability_verdict = {verdict} (eps={report.eps:.3e})")
    meta = Path(args.trace).parent / "meta.txt"
    if meta.exists():
        with meta.open("a", encoding="utf-8") as f:
            f.write(f"stability_verdict={verdict}\n")
    return EXIT_OK if report.all_converged else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sim" and args.sim_command == "run":
            return _cmd_sim_run(args)
        if args.command == "sim" and args.sim_command == "benchmark":
            return _cmd_sim_benchmark(args)
        if args.command == "zones" and args.zones_command == "compute":
            return _cmd_zones_compute(args)
        if args.command == "msd" and args.msd_command == "dynamic":
            return _cmd_msd_dynamic(args)
        if args.command == "check" and args.check_command == "stability":
            return _cmd_check_stability(args)
        parser.error("unknown command")
    except (ScenarioError, ZoneError, TraceFileError, StabilityError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # runtime failures keep a distinct exit code for CI
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
