"""Command line interface.

Subcommands map one-to-one onto the library: machine inspection,
occupancy queries, synthetic kernel runs, trace simulation, trajectory
analysis, and chart rendering.  Everything is offline file-to-file; no
daemon, no network.  Exit codes: 0 success, 1 expected failure (bad
file, diverging result, domain error), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import gpp
from .cachesim import CacheConfig, bundled_cachesim_path, load_cache_config, simulate
from .chart import ChartSpec, render_chart, validate_geometry
from .errors import RooflabError
from .machine import (
    MachineDescription,
    bundled_machine_path,
    fma_adjusted_peak,
    fma_fraction,
    load_machine,
)
from .metrics import load_metrics, save_metrics, total_flops
from .occupancy import LaunchConfig, theoretical_active_warps
from .roofline import load_report, report_to_dict, trajectory
from .tracefile import read_trace, write_trace

MACHINE_ENV_VAR = "ROOFLAB_MACHINE"


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default_machine_path() -> Path:
    env = os.environ.get(MACHINE_ENV_VAR)
    return Path(env) if env else bundled_machine_path()


def _load_machine_arg(args) -> MachineDescription:
    return load_machine(args.machine if args.machine else _default_machine_path())


def _num(value: float) -> str:
    return f"{value:.6g}"


def _resolve_cache_config(token: str, machine: MachineDescription) -> CacheConfig:
    if token == "machine":
        if machine.cache_sim is None:
            raise RooflabError(
                f"machine {machine.name!r} has no cache_sim block; pass a config file"
            )
        return machine.cache_sim
    if token == "desk":
        return load_cache_config(bundled_cachesim_path())
    return load_cache_config(token)


def cmd_machine(args) -> int:
    machine = _load_machine_arg(args)
    print(f"machine: {machine.name}")
    print(
        f"derived peak: {_num(machine.derived_peak)} FLOP/s "
        f"({machine.num_units} units x {machine.lanes_per_unit} lanes x "
        f"{machine.ops_per_lane_cycle} ops x {_num(machine.clock_hz)} Hz)"
    )
    for ceiling in machine.ceilings:
        print(
            f"ceiling {ceiling.label} [{ceiling.precision}]: "
            f"{_num(ceiling.peak_flop_per_s)} FLOP/s"
        )
    top = machine.default_ceiling()
    for level in machine.levels:
        balance = machine.balance(level.name)
        print(
            f"level {level.name}: {_num(level.bandwidth_bytes_per_s)} B/s, "
            f"balance {balance:.4g} FLOP/B vs {top.label}"
        )
    if args.fma_ratio is not None:
        adjusted = fma_adjusted_peak(top.peak_flop_per_s, args.fma_ratio)
        fraction = fma_fraction(args.fma_ratio)
        print(
            f"adjusted peak (fma ratio {args.fma_ratio:g}): {_num(adjusted)} FLOP/s "
            f"({fraction * 100:.1f}% of {top.label})"
        )
    if machine.notes:
        print(f"notes: {machine.notes}")
    return 0


def cmd_occupancy(args, parser: argparse.ArgumentParser) -> int:
    machine = _load_machine_arg(args)
    try:
        result = theoretical_active_warps(
            LaunchConfig(args.regs, args.threads_per_block), machine.sm_resources
        )
    except RooflabError as exc:
        parser.error(str(exc))
    print(
        f"warps per SM: {result.warps} of {result.max_warps} "
        f"({result.occupancy * 100:.1f}% occupancy)"
    )
    print(f"blocks per SM: {result.blocks}")
    print(f"registers per warp: {result.regs_per_warp}")
    print(f"limited by: {result.limited_by}")
    return 0


def cmd_gpp_run(args, parser: argparse.ArgumentParser) -> int:
    nbands, ngpown, ncouls = args.dims
    if min(args.dims) <= 0:
        parser.error("--dims values must all be positive")
    if args.versions == "all":
        names = list(gpp.VERSION_NAMES)
    else:
        names = [v.strip() for v in args.versions.split(",") if v.strip()]
        for name in names:
            if name not in gpp.VERSIONS:
                parser.error(f"unknown version {name!r}")
    machine = _load_machine_arg(args)
    sim_config = (
        _resolve_cache_config(args.simulate, machine) if args.simulate else None
    )

    problem = gpp.synth_problem(nbands, ngpown, ncouls, seed=args.seed)
    reference = gpp.reference_result(problem)
    artifacts = gpp.run_sweep(
        problem,
        names,
        trace=args.trace,
        sim_config=sim_config,
        resources=machine.sm_resources,
    )

    system = args.system or f"synthetic-{nbands}x{ngpown}x{ncouls}-seed{args.seed}"
    records = []
    worst = 0.0
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for art in artifacts:
        err = gpp.max_rel_error(art.result, reference)
        worst = max(worst, err)
        line = (
            f"{art.version}: flops {_num(total_flops(art.counters, args.div_weight))} "
            f"near {art.stats.near} far {art.stats.far} rel-err {err:.3e}"
        )
        if art.sim is not None:
            line += (
                f" l1-hit {art.sim.l1_hit_rate * 100:.2f}%"
                f" l2-hit {art.sim.l2_hit_rate * 100:.2f}%"
                f" hbm-bytes {_num(art.sim.bytes.hbm)}"
            )
        print(line)
        if out_dir is not None and art.trace is not None and args.trace:
            write_trace(art.trace, out_dir / f"{art.version}.trace")
        records.append(gpp.emit_metrics(art, system=system))
    if worst > args.rtol:
        print(
            f"error: version results diverge from the reference beyond rtol "
            f"{args.rtol:g} (worst {worst:.3e})",
            file=sys.stderr,
        )
        return 1
    print(f"all {len(artifacts)} versions within rtol {args.rtol:g} of reference")
    if out_dir is not None:
        save_metrics(records, out_dir / "metrics.json")
        print(f"wrote {out_dir / 'metrics.json'}")
    return 0


def cmd_simulate(args) -> int:
    machine = _load_machine_arg(args)
    config = _resolve_cache_config(args.config, machine)
    trace = read_trace(args.trace)
    outcome = simulate(trace, config)
    text = json.dumps(outcome.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        _atomic_write_text(Path(args.out), text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_analyze(args) -> int:
    machine = _load_machine_arg(args)
    records = load_metrics(args.metrics)
    report = trajectory(
        records,
        machine,
        fma_ratio=args.fma_ratio,
        div_weight=args.div_weight,
        ceiling_label=args.ceiling,
    )
    for seq in report.sequences:
        title = seq.system if seq.system is not None else "(unlabeled)"
        print(f"system {title}: {len(seq.entries)} kernels vs {report.ceiling_label}")
        for entry in seq.entries:
            parts = [
                f"  {entry.label}: {entry.runtime:.6g} s",
                f"{entry.throughput / 1e12:.4g} TFLOP/s",
                f"{entry.fraction_of_peak * 100:.1f}% of peak",
            ]
            if entry.fraction_of_adjusted_peak is not None:
                parts.append(f"{entry.fraction_of_adjusted_peak * 100:.1f}% of adjusted")
            if entry.step_speedup is not None:
                parts.append(f"step x{entry.step_speedup:.3f}")
            if entry.gaps is not None:
                parts.append(f"gaps l1/l2 {entry.gaps[0]:.3g} l2/hbm {entry.gaps[1]:.3g}")
            for point in entry.points:
                parts.append(f"{point.level} ai {point.ai:.4g} ({point.bound})")
            print(", ".join(parts))
        if seq.cumulative_speedup is not None:
            print(f"  cumulative speedup: x{seq.cumulative_speedup:.4g}")
    if args.out:
        _atomic_write_text(
            Path(args.out), json.dumps(report_to_dict(report), indent=2) + "\n"
        )
        print(f"wrote {args.out}")
    return 0


def cmd_chart(args) -> int:
    report = load_report(args.report)
    spec = ChartSpec(
        width=args.width,
        height=args.height,
        title=args.title,
    )
    svg = render_chart(report, spec)
    _atomic_write_text(Path(args.out), svg)
    print(f"wrote {args.out}")
    if args.validate:
        summary = validate_geometry(svg, report, spec)
        print(
            f"validated {summary['dots']} dots, {summary['roof_lines']} roofs, "
            f"{summary['ceiling_lines']} ceilings, "
            f"max dot error {summary['max_dot_error_px']:.3f} px"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rooflab",
        description="Roofline analysis toolkit: machines, kernels, traces, charts.",
    )
    parser.add_argument(
        "--machine",
        default=None,
        help=f"machine file (default: ${MACHINE_ENV_VAR} or the bundled description)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_machine = sub.add_parser("machine", help="inspect a machine description")
    p_machine.add_argument("--fma-ratio", type=float, default=None)

    p_occ = sub.add_parser("occupancy", help="register-file occupancy for a launch")
    p_occ.add_argument("--regs", type=int, required=True, help="registers per thread")
    p_occ.add_argument(
        "--threads-per-block", type=int, required=True, help="threads per block"
    )

    p_run = sub.add_parser("gpp-run", help="run the synthetic kernel versions")
    p_run.add_argument("--dims", type=int, nargs=3, default=list(gpp.DEFAULT_DIMS),
                       metavar=("NBANDS", "NGPOWN", "NCOULS"))
    p_run.add_argument("--seed", type=int, default=42)
    p_run.add_argument("--versions", default="all", help="comma list or 'all'")
    p_run.add_argument("--out", default=None, help="directory for traces and metrics")
    p_run.add_argument("--trace", action="store_true", help="emit per-version trace files")
    p_run.add_argument(
        "--simulate",
        default=None,
        metavar="CONFIG",
        help="cache config JSON, 'machine', or 'desk' to attach simulated bytes",
    )
    p_run.add_argument("--system", default=None, help="system label for metrics records")
    p_run.add_argument("--rtol", type=float, default=1e-10)
    p_run.add_argument("--div-weight", type=float, default=1.0)

    p_sim = sub.add_parser("simulate", help="run one trace through the cache model")
    p_sim.add_argument("trace", help="trace file")
    p_sim.add_argument(
        "--config", required=True, help="cache config JSON, 'machine', or 'desk'"
    )
    p_sim.add_argument("--out", default=None, help="write the outcome JSON here")

    p_an = sub.add_parser("analyze", help="trajectory analysis of a metrics file")
    p_an.add_argument("--metrics", required=True)
    p_an.add_argument("--fma-ratio", type=float, default=None)
    p_an.add_argument("--div-weight", type=float, default=1.0)
    p_an.add_argument("--ceiling", default=None, help="ceiling label (default: highest)")
    p_an.add_argument("--out", default=None, help="write the report JSON here")

    p_chart = sub.add_parser("chart", help="render a report as SVG")
    p_chart.add_argument("--report", required=True)
    p_chart.add_argument("--out", required=True)
    p_chart.add_argument("--title", default=None)
    p_chart.add_argument("--width", type=int, default=960)
    p_chart.add_argument("--height", type=int, default=640)
    p_chart.add_argument("--validate", action="store_true")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "machine":
            return cmd_machine(args)
        if args.command == "occupancy":
            return cmd_occupancy(args, parser)
        if args.command == "gpp-run":
            return cmd_gpp_run(args, parser)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "chart":
            return cmd_chart(args)
        parser.error(f"unknown command {args.command!r}")
    except RooflabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
