"""Drive networks end to end: encode frames into forced input spikes, simulate,
decode output spikes back into labels, and compare against the reference classifier.

Decoding relies on exact firing times.  For a frame applied at ``t0``:

* flat: ``Core[r,c]`` fires at ``t0+2`` and ``Border[r,c]`` at ``t0+4``;
* systolic: column ``c`` enters at ``t0+c``, ``Core[r,eps]`` fires at
  ``t0+c+eps+2`` and ``Border[r]`` at ``t0+c+2*eps+4``.

Output spikes anywhere else raise :class:`ContractViolation`.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .flat import build_flat
from .grid import DbscanParams, EventFrame, Label, LabelGrid, dbscan_classify, random_frame
from .network import BORDER, CORE, OUTPUT, I, Network
from .partition import PartitionSpec, build_partial, merge_partition_outputs, plan_partitions
from .simulator import SpikeRaster, SpikeSchedule, simulate
from .systolic import build_systolic

FLAT_SOLUTION_STEPS = 5


class ContractViolation(RuntimeError):
    """An output neuron fired where the timing contract allows no spike."""


# --- timing ------------------------------------------------------------------

def solution_steps(builder: str, cols: int, epsilon: int) -> int:
    if builder.endswith("flat"):
        return FLAT_SOLUTION_STEPS
    return cols + 2 * epsilon + 4


def reuse_steps(builder: str, cols: int, epsilon: int) -> int:
    if builder.endswith("flat"):
        return 1
    return cols + 2 * epsilon


# --- lookups -----------------------------------------------------------------

def _grids(net: Network) -> dict:
    cached = getattr(net, "_harness_grids", None)
    if cached is not None:
        return cached
    meta = net.meta
    out: dict = {}
    if meta.systolic:
        eps = meta.epsilon
        width = 2 * eps + 1
        i_grid = np.full((meta.rows, width), -1, dtype=np.int64)
        sel = net.collection == I
        i_grid[net.row[sel], net.pos[sel] + eps] = np.flatnonzero(sel)
        out["input"] = i_grid[:, width - 1]
        # output neuron -> (kind, row)
        outs = np.flatnonzero(net.kind == OUTPUT)
        out["out_ids"] = outs
    else:
        i_grid = np.full((meta.rows, meta.cols), -1, dtype=np.int64)
        sel = net.collection == I
        i_grid[net.row[sel], net.pos[sel]] = np.flatnonzero(sel)
        out["input"] = i_grid
    object.__setattr__(net, "_harness_grids", out)
    return out


def _oriented(frame: EventFrame, orientation: str) -> EventFrame:
    if orientation == "rows":
        return frame.transpose()
    if orientation in ("columns", "none"):
        return frame
    raise ValueError(f"unknown orientation {orientation!r}")


# --- encoders ----------------------------------------------------------------

def encode_flat(frame: EventFrame, net: Network, t0: int = 0) -> SpikeSchedule:
    if net.meta.systolic:
        raise ValueError("encode_flat needs a flat network")
    if frame.shape != (net.meta.rows, net.meta.cols):
        raise ValueError(f"frame {frame.shape} does not match network block "
                         f"{(net.meta.rows, net.meta.cols)}")
    ids = _grids(net)["input"][frame.bits]
    return SpikeSchedule(np.full(len(ids), t0, dtype=np.int64), ids)


def encode_systolic(frame: EventFrame, net: Network, orientation: str = "columns",
                    t0: int = 0) -> SpikeSchedule:
    if not net.meta.systolic:
        raise ValueError("encode_systolic needs a systolic network")
    frame = _oriented(frame, orientation)
    if frame.rows != net.meta.rows:
        raise ValueError(f"frame has {frame.rows} rows after orientation, network has {net.meta.rows}")
    r, c = np.nonzero(frame.bits)
    return SpikeSchedule(t0 + c.astype(np.int64), _grids(net)["input"][r])


# --- decoders ----------------------------------------------------------------

def _labels(bits: np.ndarray, core: np.ndarray, border: np.ndarray) -> LabelGrid:
    codes = np.where(bits, Label.NOISE, Label.NO_EVENT).astype(np.int8)
    codes[border] = Label.BORDER
    codes[core] = Label.CORE
    return LabelGrid(codes)


def _gate(bits, core, border):
    bad = (core | border) & ~bits
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ContractViolation(f"output fired for cell ({r}, {c}) which has no event")
    both = core & border
    if both.any():
        r, c = np.argwhere(both)[0]
        raise ContractViolation(f"cell ({r}, {c}) decoded as both Core and Border")


def decode_flat(raster: SpikeRaster, net: Network, frame: EventFrame, t0: int = 0,
                strict: bool = True) -> LabelGrid:
    """Labels for the frame applied at ``t0``.  With ``strict=False`` spikes at
    other timesteps are ignored (they belong to other pipelined frames)."""
    shape = (net.meta.rows, net.meta.cols)
    if frame.shape != shape:
        raise ValueError(f"frame {frame.shape} does not match network block {shape}")
    coll = net.collection[raster.ids]
    is_core = coll == CORE
    is_border = coll == BORDER
    if strict:
        off = (is_core & (raster.times != t0 + 2)) | (is_border & (raster.times != t0 + 4))
        if off.any():
            k = np.flatnonzero(off)[0]
            raise ContractViolation(f"{net.neuron(int(raster.ids[k])).role} fired at "
                                    f"t={raster.times[k]}, outside its contract")
    core = np.zeros(shape, dtype=bool)
    border = np.zeros(shape, dtype=bool)
    hit = raster.ids[is_core & (raster.times == t0 + 2)]
    core[net.row[hit], net.pos[hit]] = True
    hit = raster.ids[is_border & (raster.times == t0 + 4)]
    border[net.row[hit], net.pos[hit]] = True
    _gate(frame.bits, core, border)
    return _labels(frame.bits, core, border)


def decode_systolic(raster: SpikeRaster, net: Network, frame: EventFrame, t0: int = 0,
                    orientation: str = "columns", strict: bool = True) -> LabelGrid:
    """Labels for the frame whose column 0 entered at ``t0``."""
    eps = net.meta.epsilon
    local = _oriented(frame, orientation)
    R, C = local.shape
    if R != net.meta.rows:
        raise ValueError(f"frame has {R} rows after orientation, network has {net.meta.rows}")
    coll = net.collection[raster.ids]
    is_core = coll == CORE
    is_border = coll == BORDER
    col = np.where(is_core, raster.times - t0 - eps - 2, raster.times - t0 - 2 * eps - 4)
    in_window = (col >= 0) & (col < C)
    if strict and not in_window.all():
        k = np.flatnonzero(~in_window)[0]
        raise ContractViolation(f"{net.neuron(int(raster.ids[k])).role} fired at "
                                f"t={raster.times[k]}, column {col[k]} outside [0, {C})")
    core = np.zeros((R, C), dtype=bool)
    border = np.zeros((R, C), dtype=bool)
    sel = is_core & in_window
    core[net.row[raster.ids[sel]], col[sel]] = True
    sel = is_border & in_window
    border[net.row[raster.ids[sel]], col[sel]] = True
    _gate(local.bits, core, border)
    labels = _labels(local.bits, core, border)
    return labels.transpose() if orientation == "rows" else labels


# --- single runs -------------------------------------------------------------

def run_flat(net: Network, frame: EventFrame, **sim) -> tuple[LabelGrid, SpikeRaster]:
    raster = simulate(net, encode_flat(frame, net), FLAT_SOLUTION_STEPS, **sim)
    return decode_flat(raster, net, frame), raster


def run_systolic(net: Network, frame: EventFrame, orientation: str | None = None,
                 **sim) -> tuple[LabelGrid, SpikeRaster]:
    orientation = orientation or net.meta.orientation
    cols = _oriented(frame, orientation).cols
    horizon = solution_steps("systolic", cols, net.meta.epsilon)
    raster = simulate(net, encode_systolic(frame, net, orientation), horizon, **sim)
    return decode_systolic(raster, net, frame, 0, orientation), raster


def run_network(net: Network, frame: EventFrame, **sim) -> tuple[LabelGrid, SpikeRaster]:
    """Run any network on a frame matching its input block.  For partial networks
    the returned labels cover only the output block."""
    if net.meta.systolic:
        labels, raster = run_systolic(net, frame, **sim)
    else:
        labels, raster = run_flat(net, frame, **sim)
    g = net.meta.region
    if g is not None:
        if net.meta.systolic:
            labels = LabelGrid(labels.codes[g.out_r0:g.out_r0 + g.out_rows])
        else:
            labels = LabelGrid(labels.codes[g.out_r0:g.out_r0 + g.out_rows,
                                            g.out_c0:g.out_c0 + g.out_cols])
    return labels, raster


def run_partitioned(frame: EventFrame, plan: Sequence[PartitionSpec], min_pts: int,
                    cache: dict | None = None, **sim) -> tuple[LabelGrid, int, int]:
    """Run every part of ``plan`` on its slice of ``frame`` and merge.

    Returns (labels, timesteps simulated, spikes delivered)."""
    cache = {} if cache is None else cache
    outputs = []
    steps = delivered = 0
    for spec in plan:
        key = _network_key(spec, min_pts)
        net = cache.get(key)
        if net is None:
            net = cache[key] = build_partial(spec, min_pts)
        r0, r1 = spec.input_rows()
        c0, c1 = spec.input_cols()
        local = frame.crop(r0, r1 - r0, c0, c1 - c0)
        labels, raster = run_network(net, local, **sim)
        outputs.append((spec, labels))
        steps += raster.horizon
        delivered += raster.delivered
    return merge_partition_outputs(outputs), steps, delivered


def _network_key(spec: PartitionSpec, min_pts: int):
    if spec.policy == "retain":
        return ("retain", spec.builder, spec.n_rows, spec.n_cols, spec.grid_cols, spec.epsilon, min_pts)
    return (spec, min_pts)


# --- multi-frame runs ----------------------------------------------------------

def run_pipelined_flat(frames: Sequence[EventFrame], params: DbscanParams | None = None,
                       net: Network | None = None, **sim) -> list[LabelGrid]:
    """Apply frame k at timestep k to one flat network."""
    if net is None:
        net = build_flat(params)
    K = len(frames)
    if K == 0:
        return []
    schedule = SpikeSchedule.concat(encode_flat(f, net, t0=k) for k, f in enumerate(frames))
    raster = simulate(net, schedule, K + FLAT_SOLUTION_STEPS - 1, **sim)
    coll = net.collection[raster.ids]
    lo = np.where(coll == CORE, 2, 4)
    if ((raster.times < lo) | (raster.times >= lo + K)).any():
        raise ContractViolation("output spike outside every frame's window")
    return [decode_flat(raster, net, f, t0=k, strict=False) for k, f in enumerate(frames)]


def run_systolic_stream(frames: Sequence[EventFrame], params: DbscanParams | None = None,
                        net: Network | None = None, orientation: str = "columns",
                        gap: int | None = None, **sim) -> list[LabelGrid]:
    """Stream frames back to back through one systolic network, separated by
    ``gap`` idle timesteps (default ``2*eps``, the reuse interval)."""
    if not frames:
        return []
    if net is None:
        p = params.transposed() if orientation == "rows" else params
        net = build_systolic(p.rows, p.epsilon, p.min_pts, orientation)
    eps = net.meta.epsilon
    gap = 2 * eps if gap is None else gap
    if gap < 0:
        raise ValueError("gap must be non-negative")
    shapes = {_oriented(f, orientation).shape for f in frames}
    if len(shapes) != 1:
        raise ValueError("stream frames must share one shape")
    C = shapes.pop()[1]
    starts = [k * (C + gap) for k in range(len(frames))]
    schedule = SpikeSchedule.concat(encode_systolic(f, net, orientation, t0)
                                    for f, t0 in zip(frames, starts))
    raster = simulate(net, schedule, starts[-1] + solution_steps("systolic", C, eps), **sim)
    coll = net.collection[raster.ids]
    rel = raster.times - np.where(coll == CORE, eps + 2, 2 * eps + 4)
    k = rel // (C + gap)
    if ((rel < 0) | (k >= len(frames)) | (rel - k * (C + gap) >= C)).any():
        raise ContractViolation("output spike outside every frame's window")
    return [decode_systolic(raster, net, f, t0, orientation, strict=False)
            for f, t0 in zip(frames, starts)]


# --- verification --------------------------------------------------------------

@dataclass
class Mismatch:
    frame: int
    cell: tuple[int, int]
    expected: Label
    got: Label


@dataclass
class RunReport:
    builder: str
    params: DbscanParams
    orientation: str
    mode: str
    frames: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)
    violations: list[tuple[int, str]] = field(default_factory=list)
    timesteps: int = 0
    delivered: int = 0

    @property
    def passed(self) -> bool:
        return not self.mismatches and not self.violations

    def summary_line(self) -> str:
        p = self.params
        status = "PASS" if self.passed else "FAIL"
        bad = len(self.mismatches) + len(self.violations)
        return f"{status} {self.builder} {p.rows} {p.cols} {p.epsilon} {p.min_pts} {self.frames} {bad}"

    def render(self, limit: int = 10) -> str:
        p = self.params
        lines = [
            f"builder      {self.builder} ({self.orientation})",
            f"grid         {p.rows}x{p.cols}, eps={p.epsilon}, minPts={p.min_pts}",
            f"mode         {self.mode}",
            f"frames       {self.frames}",
            f"timesteps    {self.timesteps}",
            f"delivered    {self.delivered}",
            f"mismatches   {len(self.mismatches)}",
            f"violations   {len(self.violations)}",
        ]
        for m in self.mismatches[:limit]:
            lines.append(f"  frame {m.frame} cell {m.cell}: expected {m.expected.name}, "
                         f"got {m.got.name}")
        for k, msg in self.violations[:limit]:
            lines.append(f"  frame {k}: {msg}")
        lines.append(self.summary_line())
        return "\n".join(lines) + "\n"


def iter_frames(rows: int, cols: int, mode: str = "random", n: int = 100, seed: int = 0,
                density: float = 0.3) -> Iterable[EventFrame]:
    if mode == "exhaustive":
        cells = rows * cols
        if cells > 20:
            raise ValueError(f"exhaustive mode over {cells} cells is too large")
        for bits in itertools.product((False, True), repeat=cells):
            yield EventFrame(np.array(bits, dtype=bool).reshape(rows, cols))
    elif mode == "random":
        rng = np.random.default_rng(seed)
        for _ in range(n):
            yield random_frame(rows, cols, rng, density)
    else:
        raise ValueError(f"unknown mode {mode!r}")


def inject_fault(net: Network) -> Network:
    """Drop the first I->Core synapse feeding an output Core neuron."""
    hits = np.flatnonzero((net.collection[net.dst] == CORE) & (net.kind[net.dst] == OUTPUT)
                          & (net.collection[net.src] == I))
    if not len(hits):
        raise ValueError("network has no I->Core synapse to remove")
    return net.without_synapse(int(hits[0]))


def verify(builder: str, params: DbscanParams, mode: str = "random", *, n: int = 100,
           seed: int = 0, density: float = 0.3, orientation: str = "columns",
           partition: tuple[int, int | None] | None = None, policy: str = "delete",
           fault: bool = False, frames: Iterable[EventFrame] | None = None,
           **sim) -> RunReport:
    """Check decoded network labels against :func:`dbscan_classify`, frame by frame.

    ``builder`` is ``flat``, ``systolic``, ``partial-flat`` or ``partial-systolic``;
    partial builders need ``partition=(rows_per_part, cols_per_part_or_None)``.
    """
    report = RunReport(builder, params, orientation, mode if frames is None else "given")
    run_one = _make_runner(builder, params, orientation, partition, policy, fault, sim)
    if frames is None:
        frames = iter_frames(params.rows, params.cols, mode, n, seed, density)
    for k, frame in enumerate(frames):
        expected = dbscan_classify(frame, params)
        try:
            got, steps, delivered = run_one(frame)
        except ContractViolation as exc:
            report.violations.append((k, str(exc)))
            report.frames += 1
            continue
        report.frames += 1
        report.timesteps += steps
        report.delivered += delivered
        diff = np.argwhere(expected.codes != got.codes)
        for r, c in diff:
            report.mismatches.append(Mismatch(k, (int(r), int(c)), expected[r, c], got[r, c]))
    return report


def _make_runner(builder, params, orientation, partition, policy, fault, sim):
    if builder in ("flat", "systolic"):
        p = params.transposed() if orientation == "rows" else params
        if builder == "flat":
            net = build_flat(p)
        else:
            net = build_systolic(p.rows, p.epsilon, p.min_pts, orientation)
        if fault:
            net = inject_fault(net)

        def run_one(frame):
            if builder == "flat":
                labels, raster = run_flat(net, _oriented(frame, orientation), **sim)
                labels = labels.transpose() if orientation == "rows" else labels
            else:
                labels, raster = run_systolic(net, frame, orientation, **sim)
            return labels, raster.horizon, raster.delivered
        return run_one

    if builder in ("partial-flat", "partial-systolic"):
        if partition is None:
            raise ValueError(f"{builder} needs a partition size")
        if orientation != "columns":
            raise ValueError("partial builders run in column orientation only")
        base = builder.split("-", 1)[1]
        rows_per, cols_per = partition
        plan = plan_partitions(params, rows_per, cols_per, policy, base)
        cache: dict = {}
        if fault:
            for spec in plan:
                cache[_network_key(spec, params.min_pts)] = inject_fault(
                    build_partial(spec, params.min_pts))

        def run_one(frame):
            return run_partitioned(frame, plan, params.min_pts, cache, **sim)
        return run_one
    raise ValueError(f"unknown builder {builder!r}")


# --- deployment ------------------------------------------------------------------

_UNITS = {"": 1, "s": 1, "ms": Fraction(1, 10**3), "us": Fraction(1, 10**6),
          "ns": Fraction(1, 10**9), "hz": 1, "khz": 10**3, "mhz": 10**6, "ghz": 10**9}


def parse_quantity(text: str) -> Fraction:
    """Exact value of strings such as ``100MHz``, ``2.5us``, ``1e8`` or ``10``."""
    m = re.fullmatch(r"\s*([0-9.eE+-]+?)\s*([a-zA-Z]*)\s*", text)
    if not m or m.group(2).lower() not in _UNITS:
        raise ValueError(f"cannot parse quantity {text!r}")
    return Fraction(m.group(1)) * _UNITS[m.group(2).lower()]


@dataclass(frozen=True)
class DeploymentModel:
    clock_hz: Fraction
    io_resolution: Fraction
    events: int

    def __post_init__(self):
        object.__setattr__(self, "clock_hz", Fraction(self.clock_hz))
        object.__setattr__(self, "io_resolution", Fraction(self.io_resolution))
        if self.clock_hz <= 0 or self.io_resolution <= 0:
            raise ValueError("clock and I/O resolution must be positive")
        if self.events < 0:
            raise ValueError("event count must be non-negative")


@dataclass(frozen=True)
class DeploymentEstimate:
    builder: str
    solution_steps: int
    reuse_steps: int
    parts: int
    compute_time: Fraction
    total_compute_time: Fraction
    reuse_time: Fraction
    input_time: Fraction
    rate: Fraction
    bottleneck: str

    def render(self) -> str:
        return (f"{self.builder}: compute {format_seconds(self.compute_time)} "
                f"({self.solution_steps} steps) x{self.parts} = "
                f"{format_seconds(self.total_compute_time)}, "
                f"reuse {format_seconds(self.reuse_time)}, input {format_seconds(self.input_time)}, "
                f"rate {format_hz(self.rate)}, bottleneck {self.bottleneck}")


def estimate_deployment(builder: str, params: DbscanParams, model: DeploymentModel,
                        parts: int = 1) -> DeploymentEstimate:
    """Compute/communication timing for one frame on hardware with the given clock
    and one input spike per ``io_resolution`` seconds.  ``parts`` networks run in
    sequence on the same device (partitioned problems)."""
    if parts < 1:
        raise ValueError("parts must be positive")
    sol = solution_steps(builder, params.cols, params.epsilon)
    reuse = reuse_steps(builder, params.cols, params.epsilon)
    compute = Fraction(sol) / model.clock_hz
    reuse_time = parts * Fraction(reuse) / model.clock_hz
    input_time = model.events * model.io_resolution
    cycle = max(input_time, reuse_time)
    return DeploymentEstimate(
        builder, sol, reuse, parts, compute, parts * compute, reuse_time, input_time,
        1 / cycle, "io" if input_time > reuse_time else "compute")


def format_seconds(x: Fraction) -> str:
    for unit, scale in (("s", 1), ("ms", Fraction(1, 10**3)), ("us", Fraction(1, 10**6)),
                        ("ns", Fraction(1, 10**9))):
        if x >= scale or unit == "ns":
            return f"{float(x / scale):g}{unit}"
    raise AssertionError


def format_hz(x: Fraction) -> str:
    for unit, scale in (("GHz", 10**9), ("MHz", 10**6), ("kHz", 10**3), ("Hz", 1)):
        if x >= scale or unit == "Hz":
            return f"{float(x / scale):g}{unit}"
    raise AssertionError
