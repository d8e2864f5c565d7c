"""Print the L1 distance to the exact semigroup as eps shrinks.

    python3 scripts/vanishing_viscosity.py --system burgers --left 1 --right 0
    python3 scripts/vanishing_viscosity.py --system rotated2 --left 0.1,0.1 --right -0.1,0.05
"""
import argparse
import sys

from templelab.studies import vanishing_viscosity_study
from templelab.systems import get_system


def _vec(text):
    return [float(v) for v in text.split(",")]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--system", default="burgers")
    parser.add_argument("--left", default="1")
    parser.add_argument("--right", default="0")
    parser.add_argument("--eps", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005])
    parser.add_argument("--t", type=float, default=0.5)
    parser.add_argument("--domain", type=float, nargs=2, default=[-2.0, 2.0])
    parser.add_argument("--cells-per-eps", type=float, default=5.0)
    args = parser.parse_args(argv)

    sys_spec = get_system(args.system)
    rep = vanishing_viscosity_study(sys_spec, [0.0], [_vec(args.left), _vec(args.right)],
                                    args.eps, args.t, *args.domain,
                                    cells_per_eps=args.cells_per_eps)
    print(f"{'eps':>10s} {'L1 error':>14s}")
    for eps, err in zip(rep.series["epsilon"], rep.series["l1_error"]):
        print(f"{eps:10.4g} {err:14.6e}")
    fit = rep.fit
    if fit.get("p") is not None:
        print(f"fitted rate p = {fit['p']:.3f}")
    print("PASS" if rep.passed else "FAIL")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
