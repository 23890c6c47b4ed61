#!/usr/bin/env python3
"""All five coefficient-vanishing systems, including the completed GH/IJ runs."""
import pathlib
import sys

from thermoflow.cli import main

HERE = pathlib.Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(main(["diskvanish",
                   "--config", str(HERE / "configs" / "diskvanish_all.json"),
                   "--out", "out/diskvanish", "--json"] + sys.argv[1:]))
