"""Time kNN completion with the compiled kernel against the NumPy fallback.

    python3 benchmarks/bench_knn.py [--repeat 5] [--k 3]

Each row completes a 128 x 256 sparse map at the given coverage; outputs of the
two backends are checked for bitwise equality before timing is reported.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from lanefusion.dataio import generate_synthetic_frame
from lanefusion.geometry import SparseModalMap, available_backends, knn_complete, project_points


def random_map(rng, coverage, height=128, width=256):
    known = rng.random((height, width)) < coverage
    return SparseModalMap(rng.random((3, height, width)) * known, known)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--k", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    rng = np.random.default_rng(0)
    frame = generate_synthetic_frame(0)
    cases = [("synthetic frame", project_points(frame.cloud, frame.calib, 256, 128))]
    cases += [(f"random {c:.1%}", random_map(rng, c)) for c in (0.005, 0.015, 0.05, 0.2)]

    print(f"backends: {', '.join(backends)}; k = {args.k}; best / median of {args.repeat}")
    header = f"{'map':<18}{'coverage':>9}" + "".join(f"{b:>20}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for name, sparse in cases:
        outs = {b: knn_complete(sparse, args.k, backend=b).channels for b in backends}
        if len(backends) > 1 and not np.array_equal(outs["cython"], outs["numpy"]):
            raise SystemExit(f"backends disagree on {name}")
        timings = {b: best_of(lambda b=b: knn_complete(sparse, args.k, backend=b), args.repeat) for b in backends}
        line = f"{name:<18}{sparse.coverage:>9.3%}"
        line += "".join(f"{1e3 * t[0]:>10.1f}/{1e3 * t[1]:<6.1f}ms" for t in timings.values())
        if len(backends) > 1:
            line += f"{timings['numpy'][0] / timings['cython'][0]:>9.0f}x"
        print(line)


if __name__ == "__main__":
    main()
