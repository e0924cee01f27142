"""Heatmap of the gain over state orientation and mode-swap phase.

Usage: python plot_ms_scan.py MS_SCAN_CSV OUT_IMAGE
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
        kind="heatmap",
        out_path=args.out,
        xlabel="nu_E (rad)",
        ylabel="phi_MS (rad)",
        title="gain over orientation and swap phase",
        options={"x": "nu", "y": "phi_ms", "z": "gain", "zlabel": "gain"},
    )


if __name__ == "__main__":
    sys.exit(run_script(build_spec, sys.argv[1:]))
