"""Screen distribution behind two slits for three collapse strengths.

Also writes a visibility/damping table over a finer range of D.
"""

import argparse
from pathlib import Path

import numpy as np

from cslprop import twoslit
from cslprop.cli import main
from cslprop.params import PhysParams

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--out-dir", default="results")
args = ap.parse_args()

out = Path(args.out_dir)
out.mkdir(parents=True, exist_ok=True)
code = main(
    ["--scenario", "twoslit", "--out", str(out / "twoslit_screen.csv"), "--set", "D=0,0.001,0.01", "--set", "n_points=1601"]
)
if code:
    raise SystemExit(code)

rows = []
for D in np.concatenate([[0.0], np.geomspace(1e-4, 2e-2, 25)]):
    cfg = twoslit.TwoSlitConfig(1.0, 5.0, 10.0, PhysParams.natural(D=D))
    rows.append((D, twoslit.spread_factor(cfg), twoslit.damping_exponent(cfg), twoslit.fringe_visibility(cfg)))
np.savetxt(
    out / "twoslit_visibility.csv",
    np.array(rows),
    delimiter=",",
    fmt="%.17g",
    header="D,K,damping_exponent,fringe_visibility",
    comments="",
)
print(f"critical D = {twoslit.critical_D(cfg):g}")
