"""Steady current versus contact gap, with a quadratic fit.

Sweeps the left-contact elevation a over [0, 3] for the barrier
potential, records the late-time current for each run, and fits a
quadratic: the current vanishes at a = 0 and grows a bit faster than
linearly.  The default settings use a coarse step and mesh so the demo
finishes in about a minute; pass --full to reproduce the 61-row sweep
from configs/gap_sweep.json instead.

Run:  python demos/gap_sweep_fit.py --out demo_out/sweep
"""

import argparse
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fermidrift.experiments import load_config, run_experiment

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIG = os.path.join(os.path.dirname(HERE), "configs", "gap_sweep.json")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/sweep")
    ap.add_argument("--full", action="store_true",
                    help="run the full 61-row sweep (several minutes)")
    args = ap.parse_args()

    cfg = load_config(CONFIG)
    if not args.full:
        cfg.da = 0.25
        cfg.mesh_n = 30
        cfg.dt = 0.005
    cfg.out_dir = args.out
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = int(round((cfg.a_stop - cfg.a_start) / cfg.da)) + 1
    print(f"sweeping {rows} gap values (mesh_n={cfg.mesh_n}) ...")
    run_experiment(cfg)

    table = np.genfromtxt(os.path.join(cfg.out_dir, "gap_sweep.csv"),
                          delimiter=",", skip_header=1,
                          usecols=(0, 1), dtype=float)
    a, j = table[:, 0], table[:, 1]
    ok = np.isfinite(j)
    coef = np.polyfit(a[ok], j[ok], 2)
    fit = np.polyval(coef, a[ok])
    ss_res = float(np.sum((j[ok] - fit) ** 2))
    ss_tot = float(np.sum((j[ok] - np.mean(j[ok])) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    print(f"  quadratic fit J(a) = {coef[0]:+.4f} a^2 {coef[1]:+.4f} a "
          f"{coef[2]:+.2e}, R^2 = {r2:.6f}")

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(a[ok], j[ok], "o", ms=4, label="sweep rows")
    aa = np.linspace(cfg.a_start, cfg.a_stop, 200)
    ax.plot(aa, np.polyval(coef, aa), "-", lw=1, label="quadratic fit")
    ax.set_xlabel("contact gap a")
    ax.set_ylabel("late-time current")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(args.out, "gap_sweep.png")
    fig.savefig(path, dpi=150)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
