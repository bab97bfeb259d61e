#!/usr/bin/env python3
"""Phase-plane sweep of the separated-variable reduction.

Classifies a grid of (xi0, eta0) starting points, records the invariant
kappa0 and the blowup time where finite, and writes one CSV row per point.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from rswlab import separated


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--xi-range", type=float, nargs=2, default=(-2.5, 2.5))
    ap.add_argument("--eta-range", type=float, nargs=2, default=(-2.5, 2.5))
    ap.add_argument("--n", type=int, default=41, help="grid points per axis")
    ap.add_argument("--out", type=str, default="runs/phase_plane.csv")
    args = ap.parse_args()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    xis = np.linspace(*args.xi_range, args.n)
    etas = np.linspace(*args.eta_range, args.n)

    with out.open("w", newline="") as fh:
        fh.write("# rswlab-csv v1 phase-plane\n")
        w = csv.writer(fh)
        w.writerow(["xi0", "eta0", "regime", "kappa0", "t_blowup"])
        for xi0 in xis:
            for eta0 in etas:
                reg = separated.classify(float(xi0), float(eta0))
                w.writerow([
                    "%.10g" % xi0, "%.10g" % eta0, reg.tag,
                    "" if reg.kappa0 is None else "%.10g" % reg.kappa0,
                    "" if reg.t_blowup is None else "%.10g" % reg.t_blowup,
                ])
    print("wrote", out)


if __name__ == "__main__":
    main()
