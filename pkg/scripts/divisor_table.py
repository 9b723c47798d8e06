"""Additive divisor sums, their main terms and normalised errors.

    python3 scripts/divisor_table.py --X 1000000 --r 1,2,5,42,100
"""
import argparse

import numpy as np

from zetamom.divisor import correlation_report, sieve_divisors


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--X", type=int, default=10 ** 6)
    ap.add_argument("--r", default="1,2,5,42,100")
    args = ap.parse_args()
    rs = [int(r) for r in args.r.split(",")]
    table = sieve_divisors(args.X + max(rs))
    print(f"{'r':>5} {'sum':>16} {'main':>18} {'error':>12} {'E/X^(2/3)':>10}")
    for rec in correlation_report(args.X, rs, table):
        print(f"{rec.r:5d} {rec.sum:16d} {rec.main:18.3f} {rec.error:12.2f} {rec.normalized_error:10.4f}")
    Xs = [x for x in (10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7) if x <= args.X]
    if len(Xs) >= 2:
        errs = [abs(correlation_report(x, [1], table)[0].error) for x in Xs]
        slope = np.polyfit(np.log(Xs), np.log(errs), 1)[0]
        print(f"log-log slope of |E(X, 1)| over X in {Xs}: {slope:.3f}")


if __name__ == "__main__":
    main()
