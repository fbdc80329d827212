"""Timing comparison: numba kernels vs the pure-numpy fallback.

Runs the hot paths on synthetic data and prints per-kernel timings with
speedups, plus an end-to-end reconstruction comparison.

    python3 benchmarks/bench_backends.py [--size 512] [--repeat 3]
"""

import argparse
import time

import numpy as np

import sparsepaint.kernels as K
from sparsepaint.kernels import numpy_impl

try:
    from sparsepaint.kernels import numba_impl
except ImportError:
    numba_impl = None


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(size, repeat):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 255, (1, size, size))
    mask = (rng.random((size, size)) < 0.05).astype(np.uint8)
    mask[0, 0] = 1
    dens = np.clip(rng.uniform(0, 0.3, (size, size)), 0, 1)

    from sparsepaint.solver import build_decomposition
    d = build_decomposition(size, size, 32, 6)
    b = np.where(mask[None] > 0, x, 0.0)

    seeds_idx = np.nonzero(mask.ravel())[0]
    seeds = np.stack(np.unravel_index(seeds_idx, (size, size)),
                     axis=1).astype(np.int64)
    labels0 = np.full((size, size), -1, dtype=np.int32)
    labels0[seeds[:, 0], seeds[:, 1]] = np.arange(len(seeds), dtype=np.int32)
    steps = [1]
    s = size // 2
    while s >= 1:
        steps.append(s)
        s //= 2
    steps = np.array(steps, dtype=np.int64)

    def oras_once(impl):
        bs = impl.sym_rhs(b, mask, 1.0)
        u = np.zeros_like(x)
        m = mask[None].astype(bool)
        u[np.broadcast_to(m, u.shape)] = bs[np.broadcast_to(m, bs.shape)]
        r, norms = impl.sym_residual(u, bs, mask, 1.0)
        taus = 0.25 * (d.bh * d.bw / mask.size) * norms
        impl.oras_apply(u, r, mask, d.xs, d.ys, d.bh, d.bw, 0.0, taus,
                        d.bh * d.bw, d.weights, 1.0)

    cases = {
        "negated_laplacian": lambda impl: impl.negated_laplacian(x, 1.0),
        "sym_matvec": lambda impl: impl.sym_matvec(x, mask, 1.0),
        "oras_sweep": oras_once,
        "restrict_values": lambda impl: impl.restrict_values(x),
        "prolongate": lambda impl: impl.prolongate(
            impl.restrict_values(x), size, size),
        "jfa": lambda impl: impl.jfa_run(labels0, seeds, steps),
        "fs_dither": lambda impl: impl.fs_dither(dens),
    }

    impls = [("numpy", numpy_impl)]
    if numba_impl is not None:
        impls.append(("numba", numba_impl))
        for fn in cases.values():
            fn(numba_impl)  # trigger JIT before timing

    print(f"\nkernel timings on {size}x{size} (best of {repeat}):")
    header = f"{'kernel':<20}" + "".join(f"{n:>12}" for n, _ in impls)
    if numba_impl is not None:
        header += f"{'speedup':>10}"
    print(header)
    for name, fn in cases.items():
        times = [timed(lambda impl=impl: fn(impl), repeat)
                 for _, impl in impls]
        row = f"{name:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


def bench_end_to_end(size, repeat):
    from sparsepaint.grid import Image, Mask
    from sparsepaint.solver import MultigridConfig, inpaint

    rng = np.random.default_rng(1)
    f = Image(rng.uniform(0, 255, (1, size, size)))
    mask = Mask(rng.random((size, size)) < 0.05)
    cfg = MultigridConfig(dtype="float32")

    impls = [("numpy", numpy_impl)]
    if numba_impl is not None:
        impls.append(("numba", numba_impl))

    print(f"\nfull reconstruction on {size}x{size}, 5% stored pixels:")
    results = {}
    for name, impl in impls:
        for kname in K._KERNEL_NAMES:
            setattr(K, kname, getattr(impl, kname))
        inpaint(f, mask, cfg)  # warm
        results[name] = timed(lambda: inpaint(f, mask, cfg), repeat)
        print(f"  {name:<8} {results[name]:.3f}s")
    if len(results) == 2:
        print(f"  speedup  {results['numpy'] / results['numba']:.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if numba_impl is None:
        print("numba unavailable: timing the numpy fallback only")
    bench_kernels(args.size, args.repeat)
    bench_end_to_end(args.size, args.repeat)


if __name__ == "__main__":
    main()
