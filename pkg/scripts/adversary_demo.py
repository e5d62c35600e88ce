#!/usr/bin/env python3
"""Drive clustering algorithms through the adaptive adversary and print the
audit table: solution cost vs its lower bound, the open-center witness vs its
upper bound, closed-node counts, and the implied approximation-ratio floor."""

import argparse
import time

from detkmed.adversary import run_against
from detkmed.harness import adversary_algorithm


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--algos", default="hierarchical")
    parser.add_argument("--cases", default="4096:2:1,16384:2:1,16384:4:2",
                        help="comma-separated n:k:delta triples")
    parser.add_argument("--objective", choices=["median", "means"], default="median")
    args = parser.parse_args()

    header = (f"{'algo':>14} {'n':>6} {'k':>3} {'d':>4} {'r':>2} "
              f"{'cost':>10} {'bound':>9} {'witness':>9} {'closed':>7} "
              f"{'ratio':>6} {'queries':>9} {'secs':>6} ok")
    print(header)
    for algo in args.algos.split(","):
        for case in args.cases.split(","):
            n, k, delta = case.split(":")
            t0 = time.time()
            result = run_against(adversary_algorithm(algo), int(n), int(k),
                                 float(delta), args.objective)
            a = result.audit
            print(f"{algo:>14} {a.n:>6} {a.k:>3} {a.delta:>4g} {a.r:>2} "
                  f"{a.solution_cost:>10.1f} {a.solution_bound:>9.1f} "
                  f"{a.witness_cost:>9.1f} {a.closed_nodes:>7} "
                  f"{a.ratio:>6.2f} {a.algo_queries:>9} "
                  f"{time.time() - t0:>6.1f} {'yes' if a.passed else 'NO'}")
            for violation in a.violations:
                print(f"    violation: {violation}")


if __name__ == "__main__":
    main()
