"""Contact currents during relaxation toward a steady profile.

Evolves the square device for a monotone ramp potential and for a ramp
with a bump, recording the inflow current at the left contact and the
outflow at the right one every step.  The right-contact series rises
monotonically to the steady value; with the bump the left-contact
series overshoots first, so only one side is monotone.  The steady
value itself is checked against the 1D two-point problem.

Equivalent CLI runs:
    fermidrift currents --config configs/ramp_currents.json --out <dir>
    fermidrift currents --config configs/rampbump_currents.json --out <dir>

Run:  python demos/transient_currents.py --out demo_out/currents
"""

import argparse
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fermidrift.experiments import load_config, run_experiment
from fermidrift.potential import Potential
from fermidrift.stationary1d import solve_bvp, stationary_current

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(os.path.dirname(HERE), "configs")


def read_series(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, 0], data[:, 1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/currents")
    ap.add_argument("--mesh-n", type=int, default=50,
                    help="mesh resolution override (default 50 for speed)")
    args = ap.parse_args()

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=False)
    for ax, name in zip(axes, ("ramp_currents", "rampbump_currents")):
        cfg = load_config(os.path.join(CONFIGS, f"{name}.json"))
        cfg.mesh_n = args.mesh_n
        cfg.out_dir = os.path.join(args.out, name)
        os.makedirs(cfg.out_dir, exist_ok=True)
        print(f"running {name} (mesh_n={cfg.mesh_n}) ...")
        run_experiment(cfg)

        t_l, j_l = read_series(os.path.join(cfg.out_dir, "current_left.csv"))
        t_r, j_r = read_series(os.path.join(cfg.out_dir, "current_right.csv"))
        v = Potential.from_expression(cfg.potential, dim=1)
        j_steady = stationary_current(solve_bvp((2.0, 1.0), v))
        with open(os.path.join(cfg.out_dir, "manifest.json")) as fh:
            res = json.load(fh)["results"]
        print(f"  J_L final {res['J_L_final']:.5f}, J_R final "
              f"{res['J_R_final']:.5f}, 1D steady {j_steady:.5f}")

        ax.plot(t_l, j_l, label="left contact")
        ax.plot(t_r, j_r, label="right contact")
        ax.axhline(j_steady, color="k", ls=":", lw=1, label="1D steady value")
        ax.set_xlabel("t")
        ax.set_ylabel("J")
        ax.set_title(cfg.potential)
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(args.out, "currents.png")
    fig.savefig(path, dpi=150)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
