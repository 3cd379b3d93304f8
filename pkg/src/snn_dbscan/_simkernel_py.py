"""Pure numpy fallback for the compiled timestep loop.

Same signature and results as ``_simkernel.run``; each timestep is a dense
vector pass, so it is slower on large sparse-activity networks.
"""
import numpy as np

OUTPUT = 2


def run(threshold, kind, indptr, dst, weight, delay, force_t, force_id, horizon, record_all):
    n = len(threshold)
    buckets = np.zeros((4, n), dtype=np.int64)
    out_t, out_id = [], []
    delivered = 0
    nfired_total = 0
    watch = np.ones(n, dtype=bool) if record_all else (kind == OUTPUT)

    bounds = np.searchsorted(force_t, np.arange(horizon + 1))
    for t in range(horizon):
        slot = t & 3
        pot = buckets[slot]
        fire = pot >= threshold
        fire[force_id[bounds[t]:bounds[t + 1]]] = True
        pot[:] = 0
        ids = np.flatnonzero(fire)
        if not ids.size:
            continue
        nfired_total += ids.size
        rec = ids[watch[ids]]
        if rec.size:
            out_t.append(np.full(rec.size, t, dtype=np.int64))
            out_id.append(rec.astype(np.int32))
        starts = indptr[ids]
        counts = indptr[ids + 1] - starts
        total = int(counts.sum())
        if not total:
            continue
        delivered += total
        offsets = np.repeat(starts - np.cumsum(counts) + counts, counts)
        idx = offsets + np.arange(total)
        d, w, dl = dst[idx], weight[idx], delay[idx]
        for k in range(1, 5):
            sel = dl == k
            if sel.any():
                buckets[(t + k) & 3] += np.bincount(d[sel], weights=w[sel], minlength=n).astype(np.int64)

    if out_t:
        return np.concatenate(out_t), np.concatenate(out_id), delivered, nfired_total
    return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int32), delivered, nfired_total
