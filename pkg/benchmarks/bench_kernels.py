"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--cutoff 10] [--dim 2] [--pairings 12] [--repeat 3]

Prints best-of-``repeat`` wall times and the speedup for Gram assembly up to
the cutoff and for the crossing histogram of pair partitions.
"""

import argparse
import time

import numpy as np

from qfocklab import _pykernels
from qfocklab.fock import LevelIndex

try:
    from qfocklab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def build_levels(impl, d: int, q: float, cutoff: int) -> list:
    prev_idx = LevelIndex.build(0, d)
    prev = np.ones(1)
    out = [prev]
    for n in range(1, cutoff + 1):
        idx = LevelIndex.build(n, d)
        prev = np.asarray(impl.gram_level(n, d, q, prev_idx.block_of, prev_idx.pos, prev_idx.size,
                                          prev_idx.data_off, np.ascontiguousarray(prev),
                                          idx.members, idx.member_off, idx.data_off))
        out.append(prev)
        prev_idx = idx
    return out


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(cutoff: int = 10, dim: int = 2, pairings: int = 12, repeat: int = 3, q: float = 0.5) -> list:
    rows = []
    cases = [
        (f"gram d={dim} N={cutoff}", lambda impl: build_levels(impl, dim, q, cutoff)),
        (f"crossings n={pairings}", lambda impl: impl.crossing_histogram(pairings)),
    ]
    for name, job in cases:
        t_py = best_time(lambda: job(_pykernels), repeat)
        t_c = best_time(lambda: job(_ckernels), repeat) if _ckernels is not None else float("nan")
        if _ckernels is not None:
            a, b = job(_ckernels), job(_pykernels)
            if isinstance(a, list) and a and isinstance(a[0], np.ndarray):
                agree = all(np.allclose(x, y, atol=1e-12) for x, y in zip(a, b))
            else:
                agree = a == b
        else:
            agree = None
        rows.append({"case": name, "python_s": t_py, "cython_s": t_c,
                     "speedup": t_py / t_c if _ckernels is not None else float("nan"),
                     "agree": agree})
    return rows


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cutoff", type=int, default=10)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--pairings", type=int, default=12)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    rows = run(args.cutoff, args.dim, args.pairings, args.repeat)
    print(f"{'case':<24}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  agree")
    for r in rows:
        print(f"{r['case']:<24}{r['python_s']:>12.4f}{r['cython_s']:>12.4f}{r['speedup']:>10.1f}  {r['agree']}")


if __name__ == "__main__":
    main()
