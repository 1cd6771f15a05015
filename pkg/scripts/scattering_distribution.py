"""Momentum distribution after scattering from a narrow barrier.

Writes p, the zeroth-order distribution and the second-order correction
divided by V0^2, plus the reflection statistics in the header.
"""

import argparse
from pathlib import Path

from cslprop.cli import main

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--out-dir", default="results")
ap.add_argument("--n-points", type=int, default=801)
args = ap.parse_args()

out = Path(args.out_dir)
out.mkdir(parents=True, exist_ok=True)
settings = {"pbar": 1, "V0": 0.1, "a": 0.1, "t": 100, "D": 1e-4, "p_min": -2, "p_max": 2, "n_points": args.n_points}
argv = ["--scenario", "scatter", "--out", str(out / "scattering_distribution.csv")]
for k, v in settings.items():
    argv += ["--set", f"{k}={v}"]
raise SystemExit(main(argv))
