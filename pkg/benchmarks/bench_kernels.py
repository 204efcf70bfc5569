"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run with the package installed:

    python3 benchmarks/bench_kernels.py

The numba path is whatever `virtimu._kernels` selected at import time;
set VIRTIMU_NO_NUMBA=1 to confirm the fallback is the one being timed.
Both implementations are called directly here so a single process can
compare them side by side.
"""

import time

import numpy as np

from virtimu import _kernels


def bench(fn, *args, repeats=20):
    fn(*args)  # warm-up (includes JIT compilation for the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    rng = np.random.default_rng(0)
    rows = []

    for h, w in ((120, 160), (240, 320), (480, 640)):
        scene = rng.random((h + 64, w + 64))
        row_dy = rng.uniform(-4, 4, h)
        row_dx = rng.uniform(-4, 4, h)
        out = np.empty((h, w))
        args = (scene, 32.0, 32.0, row_dy, row_dx, out)
        t_np = bench(_kernels._bilinear_rows_np, *args)
        entry = [f"bilinear_rows {h}x{w}", t_np, None]
        if _kernels.USE_NUMBA:
            entry[2] = bench(_kernels._bilinear_rows_nb, *args)
        rows.append(entry)

        img = rng.random((h, w))
        dy = rng.uniform(-3, 3, (h, w))
        dx = rng.uniform(-3, 3, (h, w))
        args = (img, dy, dx, np.empty_like(img))
        t_np = bench(_kernels._warp_bilinear_np, *args)
        entry = [f"warp_bilinear {h}x{w}", t_np, None]
        if _kernels.USE_NUMBA:
            entry[2] = bench(_kernels._warp_bilinear_nb, *args)
        rows.append(entry)

    print(f"{'kernel':24s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:24s} {t_np * 1e3:9.3f}ms {'n/a':>10s} {'n/a':>8s}")
        else:
            print(f"{name:24s} {t_np * 1e3:9.3f}ms {t_nb * 1e3:9.3f}ms {t_np / t_nb:7.2f}x")
    if not _kernels.USE_NUMBA:
        print("numba path disabled (VIRTIMU_NO_NUMBA set or numba missing)")


if __name__ == "__main__":
    main()
