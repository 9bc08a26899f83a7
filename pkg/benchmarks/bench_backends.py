"""Compare the compiled and pure-Python F2 kernels.

Run with ``python3 benchmarks/bench_backends.py``.  Kernel timings use random
dense matrices; the end-to-end timing builds one minimal resolution in a
fresh interpreter per backend.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from f2quillen.f2la import available, pack_bits


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def kernel_rows(sizes: list[int], repeat: int) -> list[tuple[str, int, dict[str, float]]]:
    rng = np.random.default_rng(0)
    backends = available()
    rows = []
    for n in sizes:
        bits = (rng.random((n, n)) < 0.5).astype(np.uint8)
        packed = pack_bits(bits)
        other = pack_bits((rng.random((n, n)) < 0.5).astype(np.uint8))
        rref_t, mul_t = {}, {}
        for name, mod in backends.items():
            rref_t[name] = best_of(lambda: mod.rref(packed.copy(), n), repeat)
            mul_t[name] = best_of(lambda: mod.matmul(packed, n, other), repeat)
        rows.append(("rref", n, rref_t))
        rows.append(("matmul", n, mul_t))
    return rows


def resolution_time(group: str, degree: int, backend: str) -> float:
    code = (
        "import time\n"
        "from f2quillen.groups import get_group\n"
        "from f2quillen.resolve import minimal_resolution\n"
        "t = time.perf_counter()\n"
        f"minimal_resolution(get_group({group!r}), {degree})\n"
        "print(time.perf_counter() - t)\n"
    )
    env = dict(os.environ, F2QUILLEN_BACKEND=backend)
    env.pop("F2QUILLEN_CACHE_DIR", None)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[64, 256, 1024])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--group", default="C2^4")
    parser.add_argument("--degree", type=int, default=10)
    args = parser.parse_args()

    names = list(available())
    print(f"{'kernel':<8} {'n':>6} " + " ".join(f"{name:>10}" for name in names) + "   speedup")
    for kernel, n, t in kernel_rows(args.sizes, args.repeat):
        speed = f"{t['python'] / t['compiled']:8.1f}x" if "compiled" in t else "       -"
        print(f"{kernel:<8} {n:>6} " + " ".join(f"{t[name]:>9.4f}s" for name in names) + f"  {speed}")

    print(f"\nminimal resolution of {args.group} through degree {args.degree}")
    for name in names:
        print(f"  {name:<9} {resolution_time(args.group, args.degree, name):8.2f}s")


if __name__ == "__main__":
    main()
