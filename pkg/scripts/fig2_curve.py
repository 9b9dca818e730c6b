"""Tabulate E_F of a pure two-qubit state against t = 4 det(rho_x)."""
import argparse
import csv
import sys

from tangle.measures import fig2_curve


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out", help="CSV path (default: stdout)")
    args = p.parse_args()
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["t", "p0", "h"])
    for row in fig2_curve(args.samples):
        w.writerow([f"{row.t:.12g}", f"{row.p0:.12g}", f"{row.h:.12g}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
