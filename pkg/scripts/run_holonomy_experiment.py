#!/usr/bin/env python3
"""Trace-formula and variation-ODE sweep over random orbits."""
import pathlib
import sys

from thermoflow.cli import main

HERE = pathlib.Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(main(["holonomy",
                   "--config", str(HERE / "configs" / "holonomy_basic.json"),
                   "--out", "out/holonomy", "--json"] + sys.argv[1:]))
