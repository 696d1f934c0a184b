"""Compiled vs numpy-fallback timings for the neighbor kernels.

Run ``python3 benchmarks/bench_kernels.py``. Graphs are layered synthetic DAGs
(symmetrized), from workflow scale (140 jobs) up to 14k jobs. The last block
times one training epoch with each backend forced through the environment.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from flowsentry import kernel
from flowsentry.synth import SynthConfig, generate_synthetic

EPOCH_SNIPPET = """
import time
from flowsentry import kernel
from flowsentry.graph import split_dataset
from flowsentry.synth import SynthConfig, generate_dataset
from flowsentry.trainer import TrainConfig, train
ds = generate_dataset(12, SynthConfig(), seed=0)
split = split_dataset([g.graph_id for g in ds])
t = time.perf_counter()
train(ds, split, TrainConfig(epochs=3))
print(kernel.BACKEND, (time.perf_counter() - t) / 3)
"""


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def kernel_table(widths, dim, repeat):
    backends = sorted(kernel.AVAILABLE)
    print(f"{'jobs':>7} {'edges':>8} {'kernel':<22}" + "".join(f"{b:>12}" for b in backends)
          + f"{'speedup':>10}")
    for w in widths:
        g = generate_synthetic(SynthConfig(levels=7, width=w))
        rng = np.random.default_rng(0)
        h = rng.standard_normal((g.n, dim))
        mask = (rng.random(g.n) < 0.5).astype(np.uint8)
        cases = {
            "neighbor_mean": lambda b: kernel.neighbor_mean(g.indptr, g.indices, h, backend=b),
            "neighbor_mean_adjoint": lambda b: kernel.neighbor_mean_adjoint(
                g.indptr, g.indices, h, g.n, backend=b),
            "nearest_neighbor_swap": lambda b: kernel.nearest_neighbor_swap(
                g.indptr, g.indices, g.features, mask, backend=b),
        }
        for name, call in cases.items():
            times = {b: best_of(lambda b=b: call(b), repeat) for b in backends}
            speed = (f"{times['python'] / times['compiled']:9.1f}x"
                     if "compiled" in times else f"{'n/a':>10}")
            print(f"{g.n:7d} {len(g.indices) // 2:8d} {name:<22}"
                  + "".join(f"{times[b] * 1e6:10.1f}us" for b in backends) + speed)


def epoch_table():
    for backend in sorted(kernel.AVAILABLE):
        env = dict(os.environ, FLOWSENTRY_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", EPOCH_SNIPPET], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        print(f"train epoch (12 graphs x 140 jobs) {out[0]:>9}: {float(out[1]) * 1e3:8.1f} ms")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--widths", type=int, nargs="+", default=[20, 200, 2000])
    ap.add_argument("--dim", type=int, default=32, help="feature width for neighbor_mean")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-epoch", action="store_true", help="skip the end-to-end epoch timing")
    args = ap.parse_args(argv)
    print(f"active backend: {kernel.BACKEND}; available: {', '.join(sorted(kernel.AVAILABLE))}")
    kernel_table(args.widths, args.dim, args.repeat)
    if not args.no_epoch:
        epoch_table()


if __name__ == "__main__":
    main()
