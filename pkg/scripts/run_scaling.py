"""Floating hierarchies against orderings at larger N (one dataset per size).

    python3 scripts/run_scaling.py --sizes 60 100
"""
from __future__ import annotations

import argparse
import time

from heave.benchmark import STATS, run_benchmark


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[60, 100])
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    print("nodes,variant," + ",".join(STATS) + ",seconds")
    for n in args.sizes:
        for variant in ("floating", "ordered"):
            start = time.perf_counter()
            res = run_benchmark(n, [args.seed], [variant])
            row = res.final_means(variant)[0]
            print(f"{n},{variant}," + ",".join(f"{x:.4f}" for x in row)
                  + f",{time.perf_counter() - start:.0f}", flush=True)


if __name__ == "__main__":
    main()
