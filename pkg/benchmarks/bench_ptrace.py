"""Partial-trace timing: compiled kernel against the numpy fallback.

    python3 benchmarks/bench_ptrace.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from markovcert.kernels import BACKENDS, ptrace
from markovcert.state import random_mixed_state

CASES = [
    # (n_qubits, kept positions)
    (6, [0, 1]),
    (8, [2, 3, 4]),
    (10, [0, 5, 9]),
    (12, [4, 5, 6, 7]),
]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if "cython" not in BACKENDS:
        print("compiled backend unavailable; only the fallback is timed")
    print(f"{'qubits':>6} {'keep':>14} " + " ".join(f"{b:>12}" for b in BACKENDS) + f" {'speedup':>8}")
    for n, keep in CASES:
        rho = random_mixed_state([2] * n, 4, seed=n).data
        dims = [2] * n
        ref = ptrace(rho, dims, keep, backend="python")
        times = {}
        for name in BACKENDS:
            out = ptrace(rho, dims, keep, backend=name)
            assert np.allclose(out, ref, atol=1e-12), name
            number = max(1, int(2 ** (14 - n)))
            t = min(timeit.repeat(lambda: ptrace(rho, dims, keep, backend=name), number=number, repeat=args.repeat))
            times[name] = t / number
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        cols = " ".join(f"{times[b] * 1e3:10.3f}ms" for b in BACKENDS)
        print(f"{n:>6} {str(keep):>14} {cols} {speed:8.2f}")


if __name__ == "__main__":
    main()
