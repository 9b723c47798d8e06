"""Moments-of-moments main terms over a range of heights and window widths."""
import argparse

from zetamom.momofmom import AveragingKernel, m22_empirical, m22_formula


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", default="1.5707963,3.14159265,6.2831853")
    ap.add_argument("--T", default="1e4,1e8,1e12")
    ap.add_argument("--empirical-T", type=float, default=None,
                    help="also compare the grid quadrature at this height (<= 1e4)")
    args = ap.parse_args()
    print(f"{'c':>10} {'T':>8} {'dbar':>14} {'odbar':>14} {'total/T':>14}")
    for c in (float(v) for v in args.c.split(",")):
        k = AveragingKernel("indicator", c)
        for T in (float(v) for v in args.T.split(",")):
            rep = m22_formula(T, k)
            print(f"{c:10.5f} {T:8.0e} {rep.dbar:14.6f} {rep.odbar:14.6f} {rep.formula_total / T:14.6f}")
        if args.empirical_T:
            emp = m22_empirical(args.empirical_T, k)
            form = m22_formula(args.empirical_T, k).formula_total
            print(f"  empirical at T={args.empirical_T:g}: {emp:.6g} vs {form:.6g} "
                  f"(rel {abs(emp - form) / form:.2e})")


if __name__ == "__main__":
    main()
