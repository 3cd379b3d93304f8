"""Partial DBSCAN: networks that label one block of a larger grid.

An output block of ``n_rows x n_cols`` cells needs I neurons over the block
dilated by ``2*eps`` on each side (outer ring), C and Core neurons over the block
dilated by ``eps`` (inner ring), and B and Border neurons over the block itself.
Systolic parts always span every column.

Two boundary policies cover blocks near the grid edge: ``delete`` drops ring
neurons that fall outside the grid, ``retain`` keeps the full ring so that every
part of a given size has the same network, and simply never spikes those rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flat import assemble_flat
from .grid import DbscanParams, FormatError, LabelGrid
from .network import POLICIES, Network, NetworkMeta, Region
from .systolic import assemble_systolic


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class PartitionSpec:
    grid_rows: int
    grid_cols: int
    r0: int
    n_rows: int
    c0: int
    n_cols: int
    epsilon: int
    policy: str = "delete"
    builder: str = "systolic"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise PartitionError(f"policy must be one of {POLICIES}")
        if self.builder not in ("flat", "systolic"):
            raise PartitionError("builder must be 'flat' or 'systolic'")
        if self.n_rows < 1 or self.n_cols < 1 or self.epsilon < 1:
            raise PartitionError("part sizes and epsilon must be positive")
        if not (0 <= self.r0 and self.r0 + self.n_rows <= self.grid_rows
                and 0 <= self.c0 and self.c0 + self.n_cols <= self.grid_cols):
            raise PartitionError(f"output block {self.out_slices()} outside "
                                 f"{self.grid_rows}x{self.grid_cols} grid")
        if self.builder == "systolic" and (self.c0 != 0 or self.n_cols != self.grid_cols):
            raise PartitionError("systolic parts must span every column")

    def out_slices(self) -> tuple[slice, slice]:
        return slice(self.r0, self.r0 + self.n_rows), slice(self.c0, self.c0 + self.n_cols)

    def _span(self, start, length, limit, pad):
        lo, hi = start - pad, start + length + pad
        if self.policy == "delete":
            lo, hi = max(lo, 0), min(hi, limit)
        return lo, hi

    def input_rows(self) -> tuple[int, int]:
        """Grid rows covered by I neurons, half-open; may leave the grid under ``retain``."""
        return self._span(self.r0, self.n_rows, self.grid_rows, 2 * self.epsilon)

    def input_cols(self) -> tuple[int, int]:
        if self.builder == "systolic":
            return 0, self.grid_cols
        return self._span(self.c0, self.n_cols, self.grid_cols, 2 * self.epsilon)

    def core_rows(self) -> tuple[int, int]:
        return self._span(self.r0, self.n_rows, self.grid_rows, self.epsilon)

    def core_cols(self) -> tuple[int, int]:
        if self.builder == "systolic":
            return 0, self.grid_cols
        return self._span(self.c0, self.n_cols, self.grid_cols, self.epsilon)

    def to_line(self) -> str:
        return f"part {self.r0} {self.n_rows} {self.c0} {self.n_cols} {self.policy}"


def plan_partitions(params: DbscanParams, rows_per_part: int, cols_per_part: int | None = None,
                    policy: str = "delete", builder: str = "systolic") -> list[PartitionSpec]:
    """Tile the grid into output blocks, row-major; trailing blocks may be smaller."""
    R, C = params.rows, params.cols
    if cols_per_part is None:
        cols_per_part = C
    if rows_per_part < 1 or cols_per_part < 1:
        raise PartitionError("part sizes must be positive")
    if rows_per_part > R or cols_per_part > C:
        raise PartitionError(f"part size {rows_per_part}x{cols_per_part} exceeds grid {R}x{C}")
    if builder == "systolic" and cols_per_part != C:
        raise PartitionError("systolic parts must span every column")
    plan = []
    for r0 in range(0, R, rows_per_part):
        for c0 in range(0, C, cols_per_part):
            plan.append(PartitionSpec(R, C, r0, min(rows_per_part, R - r0), c0,
                                      min(cols_per_part, C - c0), params.epsilon, policy, builder))
    return plan


def _local_region(spec: PartitionSpec):
    ir0, ir1 = spec.input_rows()
    ic0, ic1 = spec.input_cols()
    cr0, cr1 = spec.core_rows()
    cc0, cc1 = spec.core_cols()
    return (ir0, ir1, ic0, ic1), (cr0 - ir0, cr1 - ir0, cc0 - ic0, cc1 - ic0), \
        (spec.r0 - ir0, spec.c0 - ic0)


def build_partial_systolic(spec: PartitionSpec, min_pts: int) -> Network:
    if spec.builder != "systolic":
        raise PartitionError("partition is not systolic")
    (ir0, ir1, _, _), (a, b, _, _), (p, _) = _local_region(spec)
    region = Region(spec.policy, p, spec.n_rows, 0, spec.grid_cols)
    meta = NetworkMeta("partial-systolic", ir1 - ir0, None, spec.epsilon, min_pts, "columns", region)
    return assemble_systolic(meta, (a, b), (p, p + spec.n_rows))


def build_partial_flat(spec: PartitionSpec, min_pts: int) -> Network:
    if spec.builder != "flat":
        raise PartitionError("partition is not flat")
    (ir0, ir1, ic0, ic1), (a, b, ca, cb), (p, pc) = _local_region(spec)
    shape = (ir1 - ir0, ic1 - ic0)
    core = np.zeros(shape, dtype=bool)
    core[a:b, ca:cb] = True
    out = np.zeros(shape, dtype=bool)
    out[p:p + spec.n_rows, pc:pc + spec.n_cols] = True
    region = Region(spec.policy, p, spec.n_rows, pc, spec.n_cols)
    meta = NetworkMeta("partial-flat", shape[0], shape[1], spec.epsilon, min_pts, "none", region)
    return assemble_flat(meta, core, out)


def build_partial(spec: PartitionSpec, min_pts: int) -> Network:
    if spec.builder == "systolic":
        return build_partial_systolic(spec, min_pts)
    return build_partial_flat(spec, min_pts)


def merge_partition_outputs(parts: list[tuple[PartitionSpec, LabelGrid]]) -> LabelGrid:
    """Stitch per-part output labels into a full-grid label grid."""
    if not parts:
        raise PartitionError("no parts to merge")
    R, C = parts[0][0].grid_rows, parts[0][0].grid_cols
    codes = np.zeros((R, C), dtype=np.int8)
    cover = np.zeros((R, C), dtype=np.int32)
    for spec, labels in parts:
        if (spec.grid_rows, spec.grid_cols) != (R, C):
            raise PartitionError("parts disagree on grid size")
        if labels.shape != (spec.n_rows, spec.n_cols):
            raise PartitionError(f"part at row {spec.r0} has labels {labels.shape}, "
                                 f"expected {(spec.n_rows, spec.n_cols)}")
        rs, cs = spec.out_slices()
        codes[rs, cs] = labels.codes
        cover[rs, cs] += 1
    if (cover > 1).any():
        r, c = np.argwhere(cover > 1)[0]
        raise PartitionError(f"parts overlap at cell ({r}, {c})")
    if (cover == 0).any():
        r, c = np.argwhere(cover == 0)[0]
        raise PartitionError(f"no part covers cell ({r}, {c})")
    return LabelGrid(codes)


def plan_to_text(plan: list[PartitionSpec]) -> str:
    if not plan:
        raise PartitionError("empty plan")
    s = plan[0]
    lines = [f"plan {s.grid_rows} {s.grid_cols} {s.epsilon} {s.builder}"]
    lines += [p.to_line() for p in plan]
    return "\n".join(lines) + "\n"


def parse_plan(text: str) -> list[PartitionSpec]:
    header = None
    plan = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        f = line.split()
        try:
            if f[0] == "plan" and header is None and len(f) == 5:
                header = (int(f[1]), int(f[2]), int(f[3]), f[4])
            elif f[0] == "part" and header is not None and len(f) == 6:
                R, C, eps, builder = header
                plan.append(PartitionSpec(R, C, int(f[1]), int(f[2]), int(f[3]), int(f[4]),
                                          eps, f[5], builder))
            else:
                raise ValueError(f"unexpected line {line!r}")
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None
    if header is None:
        raise FormatError("missing plan header")
    return plan
