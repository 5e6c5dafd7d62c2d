"""Desk-scale verification figures.

Reproduces the package's figure set: transient snapshots, convergence of
rescaled profiles to the balanced self-similar solutions, corner- and
bump-datum galleries, log-log spreading laws with fitted exponents,
front-correction decay, and normalized correction shapes against the
predicted correction profiles.  Each figure writes
out/<tag>/{data.csv, plot.svg, meta.json}; the pipeline is seed-free, so
the CSV data are bitwise reproducible.

Expect a few minutes of compute for the full set; runs are cached within
the process, so the cross-referencing figures share their simulations.
"""

import json
import time
from pathlib import Path

from dropspread import harness

for tag in harness.figure_tags():
    t0 = time.time()
    out = harness.reproduce_figure(tag, "out")
    note = ""
    meta = json.loads((Path(out) / "meta.json").read_text())
    if "fits" in meta:
        note = "  " + ", ".join(
            f"{k}: {v.get('gamma_hat', v.get('decay_hat')):.4f}"
            for k, v in meta["fits"].items())
    print(f"{tag}: {time.time() - t0:6.1f} s -> {out}{note}")
