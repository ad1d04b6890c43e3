#!/usr/bin/env python3
"""Run the default scenario end to end and print the solve report."""

import argparse
import subprocess
import sys
from pathlib import Path

from geolens import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="demo")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not (out / "checker.png").exists():
        subprocess.run(
            [sys.executable, str(Path(__file__).parent / "make_demo_image.py"),
             "--out-dir", str(out)],
            check=True,
        )

    config = Path(__file__).resolve().parent.parent / "configs" / "default.ini"
    return cli.main(
        [
            "--config", str(config),
            "--input", str(out / "checker.png"),
            "--output", str(out / "magnified.png"),
            "--emit-heatmap",
            "--emit-energy-csv",
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
