"""Benchmark the compiled quantization kernels against the NumPy fallback.

Run as ``python benchmarks/bench_kernels.py``.  Both backends are imported
directly (ignoring the import-time selection) so one process can time both.
"""

import time

import numpy as np

from arhq import _kernels_np
from arhq import kernels

try:
    from arhq import _kernels
except ImportError:
    _kernels = None

SHAPES = [(256, 256), (1024, 1024), (4096, 2048)]
REPEATS = 5


def best_of(fn, *args):
    timings = []
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        timings.append(time.perf_counter() - t0)
    return min(timings)


def main():
    print(f"selected backend at import: {kernels.backend_name}")
    if _kernels is None:
        print("compiled extension not built; benchmarking the NumPy backend only")
    rng = np.random.default_rng(0)
    header = f"{'kernel':28s} {'shape':>12s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for shape in SHAPES:
        x = rng.standard_normal(shape)
        cases = [
            ("uniform 4-bit per_row", lambda m: m.quant_uniform(x, 4, 1, 16, 0.0)),
            ("uniform 4-bit per_channel", lambda m: m.quant_uniform(x, 4, 2, 16, 0.0)),
            ("uniform 8-bit per_block/32", lambda m: m.quant_uniform(x, 8, 3, 32, 0.0)),
            ("fp4 block/16", lambda m: m.quant_fp4(x, 16)),
        ]
        for name, call in cases:
            t_np = best_of(call, _kernels_np)
            if _kernels is not None:
                t_c = best_of(call, _kernels)
                assert np.array_equal(call(_kernels), call(_kernels_np)), "backend mismatch"
                print(
                    f"{name:28s} {str(shape):>12s} {t_np * 1e3:9.2f}ms {t_c * 1e3:9.2f}ms "
                    f"{t_np / t_c:7.2f}x"
                )
            else:
                print(f"{name:28s} {str(shape):>12s} {t_np * 1e3:9.2f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
