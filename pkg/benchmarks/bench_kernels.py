#!/usr/bin/env python3
"""Benchmark the compiled scan kernel against the NumPy fallback.

Every retrieval and mining entry point funnels block scoring through
``bitextmine._kernels.scan_block``. This script swaps that attribute
between each importable implementation (the same hook the test suite
uses), times realistic workloads on identical inputs, and checks the
outputs agree exactly.

Run from the repository root after installing the package:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --rows 20000 --dim 128 --repeats 5
"""

import argparse
import platform
import time

import numpy as np

from bitextmine import _kernels
from bitextmine.embstore import EmbeddingMatrix
from bitextmine.knn import topk
from bitextmine.margin import MarginConfig, margin_argmax
from bitextmine.mine import MineConfig, mine


def unit_matrix(rng, n: int, d: int) -> EmbeddingMatrix:
    x = rng.standard_normal((n, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return EmbeddingMatrix.from_array(x.astype(np.float32), normalized=True)


def build_workloads(args):
    rng = np.random.default_rng(args.seed)
    src = unit_matrix(rng, args.rows, args.dim)
    tgt = unit_matrix(rng, args.rows, args.dim)
    return [
        (
            f"topk cosine retrieval ({args.rows}x{args.rows}, k={args.k})",
            lambda: topk(src, tgt, args.k),
            lambda r: (r.indices.tobytes(), r.scores.tobytes()),
        ),
        (
            f"margin argmax, distance ({args.rows}x{args.rows}, k=4)",
            lambda: margin_argmax(src, tgt, MarginConfig(k=4, fn="distance")),
            lambda r: (r[0].tobytes(), r[1].tobytes()),
        ),
        (
            f"union mining, ratio ({args.rows}x{args.rows}, k=4)",
            lambda: mine(src, tgt, MineConfig(margin=MarginConfig(k=4, fn="ratio"))),
            lambda r: tuple((p.src_idx, p.tgt_idx, p.score) for p in r),
        ),
    ]


def best_time(fn, repeats: int):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=8000, help="rows per matrix")
    ap.add_argument("--dim", type=int, default=64, help="embedding dimension")
    ap.add_argument("--k", type=int, default=8, help="neighbors for retrieval")
    ap.add_argument("--repeats", type=int, default=3, help="runs per timing (best kept)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    impls = _kernels.available_impls()
    print(f"python {platform.python_version()}, numpy {np.__version__}")
    print(f"implementations: {', '.join(sorted(impls))}")
    if "compiled" not in impls:
        print("note: compiled extension not built; timing the fallback only")
    print()

    all_match = True
    for label, run, fingerprint in build_workloads(args):
        print(label)
        times, prints = {}, {}
        for name in sorted(impls):
            original = _kernels.scan_block
            _kernels.scan_block = impls[name].scan_block
            try:
                times[name], result = best_time(run, args.repeats)
            finally:
                _kernels.scan_block = original
            prints[name] = fingerprint(result)
            print(f"  {name:<10} {times[name] * 1000:10.1f} ms")
        if len(prints) > 1:
            match = len(set(prints.values())) == 1
            all_match &= match
            speedup = times["numpy"] / times["compiled"]
            print(f"  speedup    {speedup:10.2f}x   outputs identical: {match}")
        print()

    if not all_match:
        print("MISMATCH between implementations")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
