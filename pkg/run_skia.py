#!/usr/bin/env python3
"""
Skia Simulator Launcher

Runs the command-line interface, e.g.:

    python run_skia.py gen --preset hot-cold --out-image w.img.json --out-trace w.sbtrace
    python run_skia.py simulate --image w.img.json --trace w.sbtrace --sbd all --out results/hot-cold
"""

from src.cli.main import main

if __name__ == "__main__":
    main()
