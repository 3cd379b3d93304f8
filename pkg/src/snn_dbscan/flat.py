"""Flat construction: five R x C neuron collections that classify a whole frame
in five timesteps and accept a new frame every timestep.

Neuron ids are laid out collection by collection (I, C, Core, B, Border), each
in row-major cell order, so a given (collection, r, c) always maps to the same id.
"""
from __future__ import annotations

import numpy as np

from .grid import DbscanParams
from .network import BORDER, CORE, HIDDEN, INPUT, OUTPUT, B, C, I, Network, NetworkMeta


def window_offsets(epsilon: int) -> np.ndarray:
    """All (dr, dc) with max(|dr|, |dc|) <= epsilon except (0, 0), row-major."""
    d = np.arange(-epsilon, epsilon + 1)
    dr, dc = np.meshgrid(d, d, indexing="ij")
    off = np.stack([dr.ravel(), dc.ravel()], axis=1)
    return off[(off != 0).any(axis=1)].astype(np.int32)


def _neighbor_synapses(dst_ids, dst_rc, src_grid, epsilon):
    """Pairs (src, dst): for every destination cell, each neighbor cell (not itself)
    that holds a neuron in ``src_grid``.  Destination-major order."""
    off = window_offsets(epsilon)
    rows, cols = src_grid.shape
    rr = dst_rc[:, 0:1] + off[None, :, 0]
    cc = dst_rc[:, 1:2] + off[None, :, 1]
    ok = (rr >= 0) & (rr < rows) & (cc >= 0) & (cc < cols)
    src = np.where(ok, src_grid[np.clip(rr, 0, rows - 1), np.clip(cc, 0, cols - 1)], -1)
    ok &= src >= 0
    dst = np.broadcast_to(dst_ids[:, None], src.shape)
    return src[ok], dst[ok]


def assemble_flat(meta: NetworkMeta, core_mask: np.ndarray, out_mask: np.ndarray) -> Network:
    """Flat network over a ``meta.rows x meta.cols`` block of I neurons.

    ``core_mask`` marks cells that get C and Core neurons, ``out_mask`` (a subset)
    the cells that also get B and Border neurons and whose Core neuron is an output.
    """
    rows, cols, eps, min_pts = meta.rows, meta.cols, meta.epsilon, meta.min_pts
    core_mask = np.asarray(core_mask, dtype=bool)
    out_mask = np.asarray(out_mask, dtype=bool)
    if core_mask.shape != (rows, cols) or out_mask.shape != (rows, cols):
        raise ValueError("masks must match the block shape")
    if (out_mask & ~core_mask).any():
        raise ValueError("output cells need C and Core neurons")

    n_i = rows * cols
    core_rc = np.argwhere(core_mask).astype(np.int32)
    out_rc = np.argwhere(out_mask).astype(np.int32)
    n_c, n_o = len(core_rc), len(out_rc)

    i_grid = np.arange(n_i, dtype=np.int32).reshape(rows, cols)
    c_ids = n_i + np.arange(n_c, dtype=np.int32)
    core_ids = c_ids + n_c
    b_ids = n_i + 2 * n_c + np.arange(n_o, dtype=np.int32)
    border_ids = b_ids + n_o
    core_grid = np.full((rows, cols), -1, dtype=np.int32)
    core_grid[core_mask] = core_ids

    all_rc = np.argwhere(np.ones((rows, cols), dtype=bool)).astype(np.int32)
    cell_rc = np.concatenate([all_rc, core_rc, core_rc, out_rc, out_rc])
    collection = np.repeat(np.array([I, C, CORE, B, BORDER], dtype=np.int8), [n_i, n_c, n_c, n_o, n_o])
    threshold = np.repeat(np.array([1, max(min_pts - 1, 1), 2, 1, 2], dtype=np.int32),
                          [n_i, n_c, n_c, n_o, n_o])
    kind = np.repeat(np.array([INPUT, HIDDEN, HIDDEN, HIDDEN, OUTPUT], dtype=np.int8),
                     [n_i, n_c, n_c, n_o, n_o])
    kind[core_ids[out_mask[core_mask]]] = OUTPUT

    i_at_core = i_grid[core_mask]
    i_at_out = i_grid[out_mask]
    core_at_out = core_grid[out_mask]
    families = [
        (*_neighbor_synapses(c_ids, core_rc, i_grid, eps), 1, 1),
        (i_at_core, core_ids, 1, 2),
    ]
    if min_pts == 1:
        # a second I->Core copy lets a lone event reach the Core threshold of 2
        families.append((i_at_core, core_ids, 1, 2))
    families += [
        (c_ids, core_ids, 1, 1),
        (*_neighbor_synapses(b_ids, out_rc, core_grid, eps), 1, 1),
        (i_at_out, border_ids, 1, 4),
        (core_at_out, border_ids, -1, 2),
        (b_ids, border_ids, 1, 1),
    ]
    src = np.concatenate([f[0] for f in families]).astype(np.int32)
    dst = np.concatenate([f[1] for f in families]).astype(np.int32)
    sizes = [len(f[0]) for f in families]
    weight = np.repeat(np.array([f[2] for f in families], dtype=np.int8), sizes)
    delay = np.repeat(np.array([f[3] for f in families], dtype=np.int8), sizes)
    return Network(meta, threshold, kind, collection, cell_rc[:, 0], cell_rc[:, 1],
                   src, dst, weight, delay)


def build_flat(params: DbscanParams) -> Network:
    meta = NetworkMeta("flat", params.rows, params.cols, params.epsilon, params.min_pts, "none")
    full = np.ones(params.shape, dtype=bool)
    return assemble_flat(meta, full, full)


def flat_synapse_count(rows: int, cols: int, epsilon: int, min_pts: int = 2) -> int:
    """Closed-form synapse count of :func:`build_flat`."""
    w_r, w_c = clipped_window_total(rows, epsilon), clipped_window_total(cols, epsilon)
    extra = rows * cols if min_pts == 1 else 0
    return 2 * (w_r * w_c - rows * cols) + 5 * rows * cols + extra


def clipped_window_total(length: int, epsilon: int) -> int:
    """Sum over a line of ``length`` cells of each cell's clipped window width."""
    m = min(epsilon, length - 1)
    return length * (2 * m + 1) - m * (m + 1)

