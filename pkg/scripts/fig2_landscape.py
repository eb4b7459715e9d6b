"""Trace-averaged lower and upper bounds over the (r, sigma_h2) grid.

    python scripts/fig2_landscape.py --out results/fig2
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from vlsf.channel import ChannelParams
from vlsf.tuner import TuneGrid, grid_search


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--rho", type=float, default=0.3)
    ap.add_argument("--snr", type=float, default=100.0)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--traces", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/fig2"))
    args = ap.parse_args()

    ch = ChannelParams.from_snr(args.snr, rho=args.rho)
    grid = TuneGrid.default(args.rho, n_eval=args.n, trace_count=args.traces, master_seed=args.seed)
    res = grid_search(grid, ch)
    args.out.mkdir(parents=True, exist_ok=True)
    res.to_csv(args.out / "tune_table.csv")

    shape = (len(grid.r_values), len(grid.sigma_h2_values))
    psi = np.array([p.mean_psi for p in res.table]).reshape(shape)
    phi = np.array([p.mean_phi for p in res.table]).reshape(shape)
    fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    for ax, z, name in zip(axes, (psi, phi), ("mean lower bound", "mean upper bound")):
        mesh = ax.pcolormesh(grid.sigma_h2_values, grid.r_values, np.ma.masked_invalid(z), shading="nearest")
        fig.colorbar(mesh, ax=ax)
        ax.set_title(f"{name}, n={args.n}")
        ax.set_xlabel("sigma_h2")
        ax.set_yscale("log")
        ax.set_yticks(grid.r_values[::2], [f"{v:.2f}" for v in grid.r_values[::2]])
        ax.minorticks_off()
    axes[0].set_ylabel("r")
    best = res.best
    axes[0].plot(best.sigma_h2, best.r, "r*", ms=12)
    fig.tight_layout()
    fig.savefig(args.out / "fig2.png", dpi=150)
    print(f"maximizer r={best.r:.4f} sigma_h2={best.sigma_h2:.4f} "
          f"mean_psi={best.mean_psi:.4f} mean_phi={best.mean_phi:.4f}")


if __name__ == "__main__":
    main()
