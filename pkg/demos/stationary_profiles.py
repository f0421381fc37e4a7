"""Stationary profiles and critical contact data in one spatial dimension.

Solves the two-point problem u (u + V)' = c for several potentials and
contact pairs, prints the selected current for each, and overlays the
profiles in a figure.  Also tabulates the critical thresholds below
which a contact value forces a vacuum region.

Run:  python demos/stationary_profiles.py --out demo_out/stationary
"""

import argparse
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fermidrift.potential import Potential
from fermidrift.stationary1d import critical_values, solve_bvp, stationary_current

POTENTIALS = {
    "ramp": "-x1",
    "sine": "sin(2*pi*x1)",
    "ramp-bump": "-x1 + exp(-x1^2)",
    "barrier": "exp(-(x1 - 1/2)^2)",
}

# (potential key, u0, u1) for the profile gallery
CASES = [
    ("ramp", 2.0, 1.0),
    ("ramp-bump", 2.0, 1.0),
    ("barrier", 2.0, 1.0),
    ("sine", 1.2, 2.2),
    ("sine", 1.2, 0.2),
    ("sine", 0.6, 1.2),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/stationary")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    print("critical contact thresholds (u0_crit, u1_crit):")
    for name, expr in POTENTIALS.items():
        crit = critical_values(Potential.from_expression(expr, dim=1))
        print(f"  {name:9s} {crit.u0_crit:.6f}, {crit.u1_crit:.6f}")

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, u0, u1 in CASES:
        v = Potential.from_expression(POTENTIALS[name], dim=1)
        profile = solve_bvp((u0, u1), v)
        label = f"{name} ({u0:g}, {u1:g})  J={stationary_current(profile):+.4f}"
        print(f"  solved {label}")
        ax.plot(profile.grid, profile.values, label=label)
        slug = f"{name.replace('-', '')}_{u0:g}_{u1:g}".replace(".", "p")
        profile.write_csv(os.path.join(args.out, f"profile_{slug}.csv"))
    ax.set_xlabel("x1")
    ax.set_ylabel("u")
    ax.legend(fontsize=8)
    ax.set_title("stationary profiles, selected flux in the legend")
    fig.tight_layout()
    fig.savefig(os.path.join(args.out, "profiles.png"), dpi=150)
    print(f"wrote {args.out}/profiles.png")


if __name__ == "__main__":
    main()
