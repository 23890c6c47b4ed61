#!/usr/bin/env python3
"""Pressure + derivative sweep on the bundled golden-mean config."""
import pathlib
import sys

from thermoflow.cli import main

HERE = pathlib.Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(main(["pressure",
                   "--config", str(HERE / "configs" / "pressure_golden_mean.json"),
                   "--out", "out/pressure", "--json"] + sys.argv[1:]))
