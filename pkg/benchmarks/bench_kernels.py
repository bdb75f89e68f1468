"""Compare the numba and numpy kernel backends.

Usage:  python3 benchmarks/bench_kernels.py [--size 200000] [--repeat 5] [--trials 300]

Part one times each kernel in-process on random sparse data. Part two runs
order finding end to end in two subprocesses, one with SHORLAB_DISABLE_NUMBA=1.
"""
import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from shorlab import _kernels

END_TO_END = """
import time
from shorlab import OrderFindConfig, run_trials
from shorlab._kernels import backend_name
cfg = OrderFindConfig.build({N}, {a}, seed=1)
run_trials(cfg, 5)  # warm up compilation and caches
t = time.perf_counter()
res = run_trials(cfg, {trials})
print(backend_name(), time.perf_counter() - t, res.success_rate)
"""


def kernel_inputs(size, rng):
    keys = rng.integers(0, size // 2, size=size, dtype=np.int64)
    amps = rng.normal(size=size) + 1j * rng.normal(size=size)
    uniq = np.unique(keys)
    table_out = rng.permutation(uniq)
    U = np.fft.fft(np.eye(3)) / np.sqrt(3)
    return keys, amps, uniq, table_out, U


def bench_kernels(size, repeat):
    rng = np.random.default_rng(0)
    keys, amps, uniq, table_out, U = kernel_inputs(size, rng)
    probes = rng.choice(uniq, size=size)
    rows = []
    for name, (merge, expand, lookup, dups) in _kernels.BACKENDS.items():
        calls = {
            "merge": lambda: merge(keys, amps),
            "expand_dit": lambda: expand(uniq, amps[:uniq.size], 1, 3, U),
            "lookup": lambda: lookup(uniq, table_out, probes),
            "duplicates": lambda: dups(uniq),
        }
        for label, fn in calls.items():
            fn()  # trigger compilation outside the timing
            best = min(timeit.repeat(fn, number=1, repeat=repeat))
            rows.append((label, name, best))
    return rows


def bench_end_to_end(N, a, trials):
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, SHORLAB_DISABLE_NUMBA=flag)
        code = END_TO_END.format(N=N, a=a, trials=trials)
        line = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                              capture_output=True, text=True).stdout.split()
        out[line[0]] = (float(line[1]), float(line[2]))
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--trials", type=int, default=300)
    p.add_argument("-N", type=int, default=21)
    p.add_argument("-a", type=int, default=2)
    args = p.parse_args(argv)

    rows = bench_kernels(args.size, args.repeat)
    print(f"kernels on {args.size} entries (best of {args.repeat}, ms)")
    print(f"{'kernel':<12}{'numpy':>10}{'numba':>10}{'speedup':>10}")
    table = {(k, b): t for k, b, t in rows}
    for kernel in dict.fromkeys(k for k, _, _ in rows):
        t_np, t_nb = table[kernel, "numpy"], table[kernel, "numba"]
        print(f"{kernel:<12}{t_np * 1e3:>10.2f}{t_nb * 1e3:>10.2f}{t_np / t_nb:>9.1f}x")

    t0 = time.perf_counter()
    e2e = bench_end_to_end(args.N, args.a, args.trials)
    print(f"\norder finding N={args.N}, a={args.a}, {args.trials} trials (s)")
    for name, (secs, rate) in sorted(e2e.items()):
        print(f"{name:<8}{secs:>8.2f}  success rate {rate:.3f}")
    print(f"(wall time {time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
