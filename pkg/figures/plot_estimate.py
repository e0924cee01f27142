"""Scatter of the per-shot phase estimates with the SQL-radius circle.

Usage: python plot_estimate.py SCATTER_CSV OUT_IMAGE --n ATOMS
"""

import argparse
import math
import sys

from render import FigureSpec, run_script


def build_spec(argv):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("out")
    parser.add_argument("--n", type=int, required=True, help="total atom number")
    args = parser.parse_args(argv)
    return FigureSpec(
        csv_paths=[args.csv],
        kind="scatter",
        out_path=args.out,
        xlabel="theta_est_A (rad)",
        ylabel="theta_est_B (rad)",
        title="joint distribution of the phase estimates",
        options={
            "x": "theta_est_a",
            "y": "theta_est_b",
            "circle": (math.pi / 2, math.pi / 2, math.sqrt(4.0 / args.n)),
        },
    )


if __name__ == "__main__":
    sys.exit(run_script(build_spec, sys.argv[1:]))
