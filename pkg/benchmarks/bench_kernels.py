"""Compare the compiled and pure-Python simulation kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from snn_dbscan import DbscanParams, build_flat, build_systolic
from snn_dbscan.grid import random_frame
from snn_dbscan.harness import encode_flat, encode_systolic, solution_steps
from snn_dbscan.simulator import SpikeSchedule, available_backends, simulate


def workloads():
    rng = np.random.default_rng(0)
    p = DbscanParams(10, 10, 2, 4)
    net = build_flat(p)
    yield "flat 10x10 eps=2, 1 frame", net, encode_flat(random_frame(10, 10, rng), net), 5

    frames = [random_frame(10, 10, rng) for _ in range(200)]
    sched = SpikeSchedule.concat(encode_flat(f, net, t0=k) for k, f in enumerate(frames))
    yield "flat 10x10 eps=2, 200 pipelined", net, sched, 204

    p = DbscanParams(64, 64, 4, 20)
    net = build_flat(p)
    yield "flat 64x64 eps=4, 1 frame", net, encode_flat(random_frame(64, 64, rng), net), 5

    net = build_systolic(260, 4, 4)
    frame = random_frame(260, 346, rng, 0.1)
    yield "systolic 260x346 eps=4", net, encode_systolic(frame, net), solution_steps("systolic", 346, 4)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; only the fallback is timed")
    print(f"{'workload':36}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, net, sched, horizon in workloads():
        best = {}
        rasters = {}
        for b in backends:
            times = []
            for _ in range(args.repeat):
                t = time.perf_counter()
                rasters[b] = simulate(net, sched, horizon, backend=b)
                times.append(time.perf_counter() - t)
            best[b] = min(times)
        assert all(r == rasters[backends[0]] for r in rasters.values()), name
        speed = f"{best['python'] / best['cython']:.1f}x" if len(best) > 1 else "-"
        print(f"{name:36}" + "".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends) + f"{speed:>10}")


if __name__ == "__main__":
    main()
