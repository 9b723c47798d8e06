"""Write a deterministic synthetic Maass spectrum to JSON for the spectral command.

    python3 scripts/make_synthetic_dataset.py out.json --entries 10 --coefficients 300
"""
import argparse

from zetamom.spectral import synthetic_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("path")
    ap.add_argument("--entries", type=int, default=10)
    ap.add_argument("--coefficients", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ds = synthetic_dataset(args.entries, args.coefficients, args.seed)
    with open(args.path, "w") as fh:
        fh.write(ds.to_json())
    print(f"wrote {len(ds.entries)} entries to {args.path}")


if __name__ == "__main__":
    main()
