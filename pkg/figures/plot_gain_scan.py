"""Line plot of the sensitivity gain against squeezing strength.

Usage: python plot_gain_scan.py GAIN_SCAN_CSV OUT_IMAGE
"""

import argparse
import sys

from render import FigureSpec, run_script


def build_spec(argv):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("out")
    args = parser.parse_args(argv)
    return FigureSpec(
        csv_paths=[args.csv],
        kind="line",
        out_path=args.out,
        xlabel="tau_E / tau_ref",
        ylabel="gain",
        title="sensitivity gain vs squeezing strength",
        options={
            "series": [
                {
                    "x": "tau_over_tauref",
                    "y": [
                        ("gain_exact", "exact", "-"),
                        ("gain_analytic", "analytic", "--"),
                    ],
                }
            ],
            "hlines": [(1.0, "SQL")],
        },
    )


if __name__ == "__main__":
    sys.exit(run_script(build_spec, sys.argv[1:]))
