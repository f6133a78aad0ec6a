#!/usr/bin/env python3
"""Regenerate the CSV data behind all nine reference figures.

Usage: python scripts/reproduce_all_figures.py [OUTPUT_DIR]
"""

import sys
from pathlib import Path

from relaysel.cli import reproduce_figure

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
out_dir.mkdir(parents=True, exist_ok=True)

for fig in range(1, 10):
    path = out_dir / f"figure_{fig}.csv"
    rows = reproduce_figure(fig, str(path))
    print(f"figure {fig}: {len(rows)} rows -> {path}")
