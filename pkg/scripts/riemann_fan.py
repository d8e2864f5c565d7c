"""Solve a Riemann problem and print the wave structure, family by family.

    python3 scripts/riemann_fan.py --system langmuir --left 0.2,0.3 --right 0.4,0.1
"""
import argparse
import sys

import numpy as np

from templelab.riemann import solve_riemann
from templelab.systems import get_system


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--system", default="rotated2")
    parser.add_argument("--left", default="0.1,0.1")
    parser.add_argument("--right", default="-0.1,0.05")
    parser.add_argument("--samples", type=int, default=9, help="xi samples to print")
    args = parser.parse_args(argv)

    spec = get_system(args.system)
    u_l = np.array([float(v) for v in args.left.split(",")])
    u_r = np.array([float(v) for v in args.right.split(",")])
    fan = solve_riemann(spec, u_l, u_r)
    body = fan.to_dict()
    print(f"sigma = {np.array2string(np.asarray(fan.sigma), precision=6)}")
    for fam in body["families"]:
        print(f"family {fam['family']}: sigma {fam['sigma']:+.6f}, waves {len(fam.get('waves', []))}")
    if fan.span is not None:
        lo, hi = fan.span
        pad = max(0.25 * (hi - lo), 0.1)
        xi = np.linspace(lo - pad, hi + pad, args.samples)
        U = fan.sample(1.0, xi).reshape(xi.size, spec.n)
        for x, u in zip(xi, U):
            print(f"  xi {x:+.4f}  u = {np.array2string(u, precision=6)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
