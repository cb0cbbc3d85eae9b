"""Time the compiled and pure-Python LCS kernels on the same workload.

    python benchmarks/bench_matching.py [--pairs N] [--length L]
"""

from __future__ import annotations

import argparse
import random
import time

from uavloop.evalharness import matching
from uavloop.sim import Transition


def workload(rng: random.Random, pairs: int, length: int) -> list[tuple[list[Transition], list[Transition]]]:
    alphabet = [Transition(0, 0, -2, 0), Transition(3, 0, 0, 0), Transition(3.08, 0, 0, 0), Transition(0, 3, 0, 0), Transition(0, 0, 0, 90)]
    return [
        ([rng.choice(alphabet) for _ in range(rng.randint(0, length))], [rng.choice(alphabet) for _ in range(rng.randint(1, length))])
        for _ in range(pairs)
    ]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--pairs", type=int, default=200_000)
    ap.add_argument("--length", type=int, default=6)
    args = ap.parse_args()
    data = workload(random.Random(0), args.pairs, args.length)
    tol = matching.DEFAULT_TOLERANCES

    start = time.perf_counter()
    slow = [matching._lcs_python(a, b, tol) for a, b in data]
    t_py = time.perf_counter() - start
    print(f"python    {t_py:8.3f} s  ({t_py / len(data) * 1e6:.2f} us/pair)")

    if matching._lcs is None:
        print("compiled  not built")
        return
    start = time.perf_counter()
    fast = [matching._lcs.lcs_length(a, b, tol.position, tol.yaw, tol.yaw_modulo) for a, b in data]
    t_c = time.perf_counter() - start
    print(f"compiled  {t_c:8.3f} s  ({t_c / len(data) * 1e6:.2f} us/pair)  speedup x{t_py / t_c:.1f}")
    assert fast == slow, "kernels disagree"


if __name__ == "__main__":
    main()
