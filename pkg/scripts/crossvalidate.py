#!/usr/bin/env python3
"""Run the full cross-oracle validation suite on a few canonical setups.

Usage: python scripts/crossvalidate.py [TRIALS]
"""

import sys

from relaysel.channel import SystemConfig
from relaysel.cli import validate

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000

setups = {
    "M=4 delay only (rho_f=0.9)": SystemConfig.symmetric(M=4, power=10.0, rho_f=0.9),
    "M=2 delay + estimation error": SystemConfig.symmetric(
        M=2, power=10.0, rho_e=0.95, rho_f=0.9
    ),
    "M=3 fresh feedback (degenerate)": SystemConfig.symmetric(M=3, power=10.0, rho_f=1.0),
}

failed = False
for name, cfg in setups.items():
    print(f"== {name}")
    ok, report = validate(cfg, trials, seed=42)
    for line in report:
        print("  " + line)
    failed = failed or not ok

sys.exit(1 if failed else 0)
