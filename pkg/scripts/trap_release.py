"""Spread of centre of mass and half separation after trap release."""

import argparse
from pathlib import Path

from cslprop.cli import main

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--out-dir", default="results")
args = ap.parse_args()

out = Path(args.out_dir)
out.mkdir(parents=True, exist_ok=True)
for D in ("0.1", "0"):
    name = out / f"trap_release_D{D}.csv"
    code = main(["--scenario", "twoparticle", "--out", str(name), "--set", f"D={D}", "--set", "n_times=201"])
    if code:
        raise SystemExit(code)
