#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure NumPy fallback.

Times the two hot kernels on training-shaped workloads and a short
end-to-end training run. Usage:

    python benchmarks/bench_kernels.py [--repeats 300] [--clips 16] [--frames 186]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mospoison.features import FeatureFrames
from mospoison.kernels import pure
from mospoison.regressor import TrainConfig, init_params, train

try:
    from mospoison.kernels import _fast
except ImportError:
    _fast = None


def make_workload(n_clips: int, frames: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    feats = np.ascontiguousarray(rng.normal(-8, 5, (n_clips * frames, 32)))
    offsets = np.arange(0, n_clips * frames + 1, frames, dtype=np.int64)
    labels = rng.uniform(1, 5, n_clips)
    return feats, offsets, labels


def time_call(fn, repeats: int) -> float:
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats * 1e3


def bench_kernels(args) -> None:
    feats, offsets, labels = make_workload(args.clips, args.frames)
    p = init_params(0)
    params = (p.W1, p.b1, p.W2, p.b2, p.w3, p.b3)

    backends = [("numpy", pure)]
    if _fast is not None:
        backends.append(("cython", _fast))

    print(f"workload: {args.clips} clips x {args.frames} frames, {args.repeats} repeats")
    print(f"{'backend':<8} {'pooled_scores':>15} {'mse_loss_grad':>15}")
    times = {}
    for name, mod in backends:
        t_fwd = time_call(lambda: mod.pooled_scores(feats, offsets, *params), args.repeats)
        t_grad = time_call(
            lambda: mod.mse_loss_grad(feats, offsets, labels, *params), args.repeats
        )
        times[name] = (t_fwd, t_grad)
        print(f"{name:<8} {t_fwd:>12.3f} ms {t_grad:>12.3f} ms")
    if len(times) == 2:
        fwd_speedup = times["numpy"][0] / times["cython"][0]
        grad_speedup = times["numpy"][1] / times["cython"][1]
        print(f"speedup  {fwd_speedup:>12.2f} x {grad_speedup:>12.2f} x")

    # agreement check on the same workload
    if _fast is not None:
        r_pure = pure.mse_loss_grad(feats, offsets, labels, *params)
        r_fast = _fast.mse_loss_grad(feats, offsets, labels, *params)
        worst = max(
            float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            for a, b in zip(r_pure, r_fast)
            if np.asarray(a).size
        )
        print(f"max |pure - cython| over outputs: {worst:.3e}")


def bench_training(args) -> None:
    import mospoison.kernels as kernels

    rng = np.random.default_rng(1)
    clips = [FeatureFrames(frames=rng.normal(-8, 5, (args.frames, 32))) for _ in range(96)]
    labels = rng.uniform(1, 5, 96)
    cfg = TrainConfig(epochs=5, batch_size=16, seed=0)

    saved = (kernels.pooled_scores, kernels.mse_loss_grad)
    results = {}
    try:
        for name, mod in (("numpy", pure), ("cython", _fast)):
            if mod is None:
                continue
            kernels.pooled_scores = mod.pooled_scores
            kernels.mse_loss_grad = mod.mse_loss_grad
            t0 = time.perf_counter()
            train(clips, labels, cfg)
            results[name] = time.perf_counter() - t0
            print(f"train 96 clips x 5 epochs [{name}]: {results[name]:.2f} s")
    finally:
        kernels.pooled_scores, kernels.mse_loss_grad = saved
    if len(results) == 2:
        print(f"training speedup: {results['numpy'] / results['cython']:.2f} x")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=300)
    parser.add_argument("--clips", type=int, default=16)
    parser.add_argument("--frames", type=int, default=186)
    args = parser.parse_args()
    bench_kernels(args)
    print()
    bench_training(args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
