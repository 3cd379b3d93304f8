"""Systolic construction: one network per row count that consumes a frame one
column per timestep.  Its size depends on R and epsilon only.

I and Core neurons carry a column offset ``e`` in ``[-epsilon, epsilon]``; spikes
shift from offset ``e`` to ``e - 1`` each timestep, so at any moment the offsets
hold a window of ``2*epsilon + 1`` consecutive columns.
"""
from __future__ import annotations

import numpy as np

from .flat import clipped_window_total
from .network import BORDER, CORE, HIDDEN, INPUT, NO_POS, OUTPUT, B, C, I, Network, NetworkMeta


def assemble_systolic(meta: NetworkMeta, core_rows: tuple[int, int],
                      out_rows: tuple[int, int]) -> Network:
    """Systolic network over ``meta.rows`` rows of I neurons.

    Rows in ``[core_rows[0], core_rows[1])`` get C and Core neurons; rows in
    ``out_rows`` (nested inside) also get B and Border neurons and an output Core.
    """
    rows, eps, min_pts = meta.rows, meta.epsilon, meta.min_pts
    a, b = core_rows
    p, q = out_rows
    if not (0 <= a <= p <= q <= b <= rows):
        raise ValueError(f"bad row ranges: core {core_rows}, out {out_rows}, rows {rows}")
    width = 2 * eps + 1
    n_i, n_c, n_o = rows * width, b - a, q - p
    offsets = np.arange(-eps, eps + 1, dtype=np.int32)

    # id grids indexed [row, e + eps]; -1 where absent
    i_grid = np.arange(n_i, dtype=np.int32).reshape(rows, width)
    c_base = n_i
    core_base = c_base + n_c
    b_base = core_base + n_c * width
    border_base = b_base + n_o
    core_grid = np.full((rows, width), -1, dtype=np.int32)
    core_grid[a:b] = core_base + np.arange(n_c * width, dtype=np.int32).reshape(n_c, width)

    def c_id(r):
        return c_base + (r - a)

    def b_id(r):
        return b_base + (r - p)

    def border_id(r):
        return border_base + (r - p)

    i_rows = np.repeat(np.arange(rows, dtype=np.int32), width)
    core_rows_arr = np.repeat(np.arange(a, b, dtype=np.int32), width)
    c_rows = np.arange(a, b, dtype=np.int32)
    o_rows = np.arange(p, q, dtype=np.int32)
    row = np.concatenate([i_rows, c_rows, core_rows_arr, o_rows, o_rows])
    pos = np.concatenate([np.tile(offsets, rows), np.full(n_c, NO_POS, dtype=np.int32),
                          np.tile(offsets, n_c), np.full(2 * n_o, NO_POS, dtype=np.int32)])
    sizes = [n_i, n_c, n_c * width, n_o, n_o]
    collection = np.repeat(np.array([I, C, CORE, B, BORDER], dtype=np.int8), sizes)
    threshold = np.repeat(np.array([1, max(min_pts - 1, 1), 1, 1, 2], dtype=np.int32), sizes)
    kind = np.repeat(np.array([HIDDEN, HIDDEN, HIDDEN, HIDDEN, OUTPUT], dtype=np.int8), sizes)
    kind[i_grid[:, width - 1]] = INPUT
    head = core_grid[a:b, width - 1]
    threshold[head] = 2
    kind[core_grid[p:q, width - 1]] = OUTPUT

    def shift_chain(grid_rows):
        # offset e feeds offset e - 1
        return grid_rows[:, 1:].ravel(), grid_rows[:, :-1].ravel()

    def window_into(grid, dst_rows, dst_ids):
        src, dst = [], []
        for r, d in zip(dst_rows.tolist(), dst_ids.tolist()):
            block = grid[max(r - eps, 0):r + eps + 1].copy()
            block[r - max(r - eps, 0), eps] = -1
            s = block.ravel()
            s = s[s >= 0]
            src.append(s)
            dst.append(np.full(len(s), d, dtype=np.int32))
        if not src:
            return np.empty(0, np.int32), np.empty(0, np.int32)
        return np.concatenate(src), np.concatenate(dst)

    core_rows_ids = np.array([c_id(r) for r in c_rows], dtype=np.int32)
    out_b = np.array([b_id(r) for r in o_rows], dtype=np.int32)
    out_border = np.array([border_id(r) for r in o_rows], dtype=np.int32)
    families = [
        (*shift_chain(i_grid), 1, 1),
        (*window_into(i_grid, c_rows, core_rows_ids), 1, 1),
        (i_grid[a:b, eps], head, 1, 2),
    ]
    if min_pts == 1:
        families.append((i_grid[a:b, eps], head, 1, 2))
    families += [
        (i_grid[p:q, 0], out_border, 1, 4),
        (core_rows_ids, head, 1, 1),
        (*shift_chain(core_grid[a:b]), 1, 1),
        (*window_into(core_grid, o_rows, out_b), 1, 1),
        (core_grid[p:q, eps], out_border, -1, 2),
        (out_b, out_border, 1, 1),
    ]
    src = np.concatenate([np.asarray(f[0], dtype=np.int32) for f in families])
    dst = np.concatenate([np.asarray(f[1], dtype=np.int32) for f in families])
    sizes = [len(f[0]) for f in families]
    weight = np.repeat(np.array([f[2] for f in families], dtype=np.int8), sizes)
    delay = np.repeat(np.array([f[3] for f in families], dtype=np.int8), sizes)
    return Network(meta, threshold, kind, collection, row, pos, src, dst, weight, delay)


def build_systolic(rows: int, epsilon: int, min_pts: int, orientation: str = "columns") -> Network:
    for name, v in (("rows", rows), ("epsilon", epsilon)):
        if v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v}")
    n = (2 * epsilon + 1) ** 2
    if not 1 <= min_pts <= n:
        raise ValueError(f"min_pts must lie in [1, {n}], got {min_pts}")
    if orientation not in ("columns", "rows"):
        raise ValueError("orientation must be 'columns' or 'rows'")
    meta = NetworkMeta("systolic", rows, None, epsilon, min_pts, orientation)
    return assemble_systolic(meta, (0, rows), (0, rows))


def systolic_synapse_count(rows: int, epsilon: int, min_pts: int = 2) -> int:
    """Closed-form synapse count of :func:`build_systolic`."""
    w = clipped_window_total(rows, epsilon)
    extra = rows if min_pts == 1 else 0
    return 4 * rows * epsilon + 2 * (w * (2 * epsilon + 1) - rows) + 5 * rows + extra


def systolic_neuron_count(rows: int, epsilon: int) -> int:
    return rows * (4 * epsilon + 5)
