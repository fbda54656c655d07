#!/usr/bin/env python3
"""Regenerate the bridge test fixtures and, optionally, the golden wire files.

Fixtures (bridge/test/fixtures/):
  blank.png      640x480 black frame
  astronaut.png  upright person portrait from scikit-image sample data
  figure.png     rendered stick figure from the rotpose synthetic benchmark

Golden wire files (tests/data/bridge/, with --goldens) are produced by
running the built bridge CLI on each fixture. Requires `npm run build` first.
"""
import argparse
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import cv2
import numpy as np

BRIDGE_DIR = Path(__file__).resolve().parent.parent
FIXTURES = BRIDGE_DIR / "test" / "fixtures"
GOLDENS = BRIDGE_DIR.parent / "tests" / "data" / "bridge"


def write_blank() -> None:
    cv2.imwrite(str(FIXTURES / "blank.png"), np.zeros((480, 640, 3), np.uint8))


def write_astronaut() -> None:
    from skimage import data

    rgb = data.astronaut()
    cv2.imwrite(str(FIXTURES / "astronaut.png"), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))


def write_figure() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [
                sys.executable,
                "-m",
                "rotpose.cli",
                "simulate",
                "--script",
                "upright_walk",
                "--frames-count",
                "2",
                "--seed",
                "1",
                "--rasterize",
                "--out",
                tmp,
            ],
            check=True,
        )
        shutil.copy(Path(tmp) / "frame_000000.png", FIXTURES / "figure.png")


def write_goldens() -> None:
    cli = BRIDGE_DIR / "dist" / "cli.js"
    if not cli.exists():
        raise SystemExit("dist/cli.js missing, run `npm run build` in bridge/ first")
    GOLDENS.mkdir(parents=True, exist_ok=True)
    for name in ("blank", "astronaut", "figure"):
        subprocess.run(
            ["node", str(cli), str(FIXTURES / f"{name}.png"), str(GOLDENS / f"{name}.json")],
            check=True,
        )
        print(f"wrote {GOLDENS / f'{name}.json'}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--goldens", action="store_true", help="also regenerate tests/data/bridge/*.json")
    args = parser.parse_args()
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_blank()
    write_astronaut()
    write_figure()
    print(f"fixtures written to {FIXTURES}")
    if args.goldens:
        write_goldens()


if __name__ == "__main__":
    main()
