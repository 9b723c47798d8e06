"""Empirical shifted fourth moments against the main-term integral.

    python3 scripts/moment_table.py --T 2000 --betas 0,1,5,20
"""
import argparse

from zetamom.analytic import q2_integral
from zetamom.empirical import moment_quadrature
from zetamom.smoothing import ShiftConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=2000.0)
    ap.add_argument("--betas", default="0,1,5,20")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    print(f"{'beta':>8} {'empirical':>16} {'main term':>16} {'rel diff':>10}")
    for beta in (float(b) for b in args.betas.split(",")):
        sh = ShiftConfig(0.0, beta)
        emp = moment_quadrature(0.0, args.T, sh, workers=args.workers)
        main_ = q2_integral(0.0, args.T, sh)
        print(f"{beta:8g} {emp:16.6f} {main_:16.6f} {abs(emp - main_) / abs(main_):10.2e}")


if __name__ == "__main__":
    main()
