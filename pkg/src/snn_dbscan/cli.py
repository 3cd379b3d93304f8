"""Command-line entry point: ``snn-dbscan build|run|classify|verify|bench|render``.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .flat import build_flat
from .grid import DbscanParams, FormatError, dbscan_classify, parse_frame, parse_labels
from .harness import (ContractViolation, DeploymentModel, estimate_deployment,
                      parse_quantity, reuse_steps, run_network, run_pipelined_flat,
                      run_systolic_stream, solution_steps, verify)
from .network import read_network, validate, write_network
from .partition import PartitionError, build_partial, plan_partitions
from .simulator import BACKEND, available_backends
from .systolic import build_systolic

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _partition(text):
    parts = text.split(",")
    try:
        rows = int(parts[0])
        cols = int(parts[1]) if len(parts) > 1 else None
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected I_R[,I_C], got {text!r}") from None
    if len(parts) > 2 or rows < 1 or (cols is not None and cols < 1):
        raise argparse.ArgumentTypeError(f"expected I_R[,I_C], got {text!r}")
    return rows, cols


def _deploy(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected clock,io_resolution,events")
    try:
        return DeploymentModel(parse_quantity(parts[0]), parse_quantity(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid_args(p, rows_required=True):
    p.add_argument("--rows", type=_positive, required=rows_required)
    p.add_argument("--cols", type=_positive)
    p.add_argument("--epsilon", type=_positive, required=rows_required)
    p.add_argument("--minpts", type=_positive, required=rows_required)


def _params(args) -> DbscanParams:
    cols = args.cols if args.cols is not None else args.rows
    try:
        return DbscanParams(args.rows, cols, args.epsilon, args.minpts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snn-dbscan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a network and write it in the snn-dbscan text format")
    p.add_argument("--builder", choices=("flat", "systolic"), required=True)
    _grid_args(p)
    p.add_argument("--partition", type=_partition, metavar="I_R[,I_C]")
    p.add_argument("--policy", choices=("delete", "retain"), default="delete")
    p.add_argument("--part", type=int, default=0, help="which part of the plan to build")
    p.add_argument("--orientation", choices=("columns", "rows"), default="columns")
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("classify", help="label a frame with the reference classifier")
    p.add_argument("frame", type=Path)
    p.add_argument("--epsilon", type=_positive, required=True)
    p.add_argument("--minpts", type=_positive, required=True)
    p.add_argument("--render", action="store_true", help="ASCII instead of the label format")
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("run", help="label frames by simulating a network file")
    p.add_argument("network", type=Path)
    p.add_argument("frames", type=Path, nargs="+")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--pipeline", action="store_true", help="flat: one frame per timestep")
    mode.add_argument("--stream", action="store_true", help="systolic: frames back to back")
    p.add_argument("--render", action="store_true")
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("verify", help="compare simulated labels with the reference classifier")
    p.add_argument("--builder", choices=("flat", "systolic"), required=True)
    _grid_args(p)
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--exhaustive", action="store_true")
    how.add_argument("--random", type=_positive, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--orientation", choices=("columns", "rows"), default="columns")
    p.add_argument("--partition", type=_partition, metavar="I_R[,I_C]")
    p.add_argument("--policy", choices=("delete", "retain"), default="delete")
    p.add_argument("--inject-fault", action="store_true", help="delete one synapse first")
    p.add_argument("--backend", choices=available_backends())

    p = sub.add_parser("bench", help="network size, timing and deployment table")
    p.add_argument("--builder", choices=("flat", "systolic", "both"), default="both")
    _grid_args(p, rows_required=False)
    p.add_argument("--partition", type=_partition, metavar="I_R[,I_C]")
    p.add_argument("--policy", choices=("delete", "retain"), default="retain")
    p.add_argument("--deploy", type=_deploy, metavar="CLOCK,IO_RES,EVENTS",
                   help="e.g. 100MHz,2.5us,10")

    p = sub.add_parser("render", help="ASCII rendering of a label file")
    p.add_argument("labels", type=Path)
    return parser


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None


def _emit(text: str, output: Path | None):
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)


def _format_labels(grids, render: bool) -> str:
    return "".join(g.render() if render else g.to_text() for g in grids)


def cmd_build(args) -> int:
    if args.builder == "systolic" and not args.partition:
        try:
            net = build_systolic(args.rows, args.epsilon, args.minpts, args.orientation)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        params = _params(args)
        if args.partition:
            rows_per, cols_per = args.partition
            try:
                plan = plan_partitions(params, rows_per, cols_per, args.policy, args.builder)
            except PartitionError as exc:
                raise UsageError(str(exc)) from None
            if not 0 <= args.part < len(plan):
                raise UsageError(f"--part must lie in [0, {len(plan)})")
            net = build_partial(plan[args.part], params.min_pts)
        else:
            net = build_flat(params)
    report = validate(net)
    print(f"{net.n_neurons} neurons, {net.n_synapses} synapses")
    print(report.summary())
    if args.output:
        with open(args.output, "w") as fh:
            write_network(net, fh)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_classify(args) -> int:
    frame = parse_frame(_read(args.frame))
    try:
        params = DbscanParams(frame.rows, frame.cols, args.epsilon, args.minpts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(_format_labels([dbscan_classify(frame, params)], args.render), args.output)
    return EXIT_OK


def cmd_run(args) -> int:
    with open(args.network) as fh:
        net = read_network(fh)
    frames = [parse_frame(_read(p)) for p in args.frames]
    if args.pipeline:
        if net.meta.systolic or net.meta.region is not None:
            raise UsageError("--pipeline needs a flat network")
        grids = run_pipelined_flat(frames, net=net)
    elif args.stream:
        if not net.meta.systolic or net.meta.region is not None:
            raise UsageError("--stream needs a systolic network")
        grids = run_systolic_stream(frames, net=net, orientation=net.meta.orientation)
    else:
        grids = [run_network(net, f)[0] for f in frames]
    _emit(_format_labels(grids, args.render), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    params = _params(args)
    builder = args.builder
    if args.partition:
        builder = f"partial-{builder}"
    try:
        report = verify(builder, params, "exhaustive" if args.exhaustive else "random",
                        n=args.random or 0, seed=args.seed, density=args.density,
                        orientation=args.orientation, partition=args.partition,
                        policy=args.policy, fault=args.inject_fault, backend=args.backend)
    except (ValueError, PartitionError) as exc:
        raise UsageError(str(exc)) from None
    sys.stdout.write(report.render())
    return EXIT_OK if report.passed else EXIT_FAIL


_BENCH_DEFAULTS = [(10, 10, 2), (260, 346, 4)]
_BENCH_ROWS = ("Neurons", "Synapses", "Timesteps to Solution", "Timesteps to Reuse",
               "Max Synapse Delay", "Max Neuron Threshold", "Max Fan-Out", "Max Fan-In")


def cmd_bench(args) -> int:
    if args.rows is not None:
        if args.epsilon is None:
            raise UsageError("--rows needs --epsilon")
        sizes = [(args.rows, args.cols or args.rows, args.epsilon)]
    else:
        sizes = _BENCH_DEFAULTS
    builders = ("flat", "systolic") if args.builder == "both" else (args.builder,)
    columns = []
    for builder in builders:
        for R, C, eps in sizes:
            min_pts = args.minpts or min(4, (2 * eps + 1) ** 2)
            params = DbscanParams(R, C, eps, min_pts)
            parts = 1
            t = time.perf_counter()
            if args.partition:
                plan = plan_partitions(params, args.partition[0], args.partition[1],
                                       args.policy, builder)
                parts = len(plan)
                net = build_partial(plan[min(1, parts - 1)], min_pts)
            elif builder == "flat":
                net = build_flat(params)
            else:
                net = build_systolic(R, eps, min_pts)
            elapsed = time.perf_counter() - t
            rep = validate(net)
            label = f"{builder} {R}x{C} eps={eps}" + (f" /{parts}" if parts > 1 else "")
            values = (rep.neurons, rep.synapses, solution_steps(builder, C, eps),
                      reuse_steps(builder, C, eps), rep.max_delay, rep.max_threshold,
                      rep.max_fan_out, rep.max_fan_in)
            columns.append((label, values, elapsed, params, parts))
    width = max(len(r) for r in _BENCH_ROWS) + 2
    colw = max(len(c[0]) for c in columns) + 2
    print(f"{'':{width}}" + "".join(f"{c[0]:>{colw}}" for c in columns))
    for i, name in enumerate(_BENCH_ROWS):
        print(f"{name:{width}}" + "".join(f"{c[1][i]:>{colw},}" for c in columns))
    print(f"{'Build time (s)':{width}}" + "".join(f"{c[2]:>{colw}.3f}" for c in columns))
    print(f"simulation backend: {BACKEND}")
    if args.deploy:
        for label, _, _, params, parts in columns:
            est = estimate_deployment(label.split()[0], params, args.deploy, parts)
            print(f"deploy {label}: {est.render()}")
    return EXIT_OK


def cmd_render(args) -> int:
    sys.stdout.write(parse_labels(_read(args.labels)).render())
    return EXIT_OK


_COMMANDS = {"build": cmd_build, "classify": cmd_classify, "run": cmd_run,
             "verify": cmd_verify, "bench": cmd_bench, "render": cmd_render}


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"snn-dbscan {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ContractViolation) as exc:
        print(f"snn-dbscan {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL if isinstance(exc, ContractViolation) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
