"""Connection probability of five external nodes vs node density.

A 0.3 x 5.0 room has five keyholes along the bottom wall, each with an
external node behind it.  The plot shows the analytic probability that
every external node reaches the mesh, with and without reflections, and
Monte Carlo points for the C = 2 case.

Run:  python3 demos/density_sweep.py [--save fig.png]
"""

import argparse
import math

import matplotlib.pyplot as plt
import numpy as np

from keyhole.analytic import expected_external_H, multi_hole_connect_prob
from keyhole.channel import ChannelParams
from keyhole.geometry import KeyholeDomain, KeyholeSpec
from keyhole.montecarlo import SimConfig, all_externals_connected_prob

PHI = math.pi / 16


def analytic_curve(dom, params, rhos, C):
    per_hole = [
        expected_external_H(dom, hole, params, C).total_unnormalized
        for hole in dom.holes
    ]
    return [multi_hole_connect_prob([rho * v for v in per_hole]) for rho in rhos]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--save", default=None)
    args = ap.parse_args()

    params = ChannelParams(K=4, beta=1, eta=2, alpha=args.alpha)
    holes = tuple(
        KeyholeSpec.from_half_angle(PHI / 2, depth=0.1, wall_position=x)
        for x in (0.5, 1.5, 2.5, 3.5, 4.5)
    )
    dom = KeyholeDomain(height=0.3, length=5.0, holes=holes)
    rhos = np.linspace(20, 400, 60)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(rhos, analytic_curve(dom, params, rhos, 0), "k:", label="analytic, C = 0")
    ax.plot(rhos, analytic_curve(dom, params, rhos, 2), "r-", label="analytic, C = 2")

    mc_rhos = np.linspace(40, 400, 7)
    mc, err = [], []
    for rho in mc_rhos:
        est = all_externals_connected_prob(
            dom, params,
            SimConfig(trials=args.trials, seed=2, density=float(rho), C=2),
        )
        mc.append(est.mean)
        err.append(1.96 * est.std_error)
    ax.errorbar(mc_rhos, mc, yerr=err, fmt="ko", ms=4, capsize=3, label="Monte Carlo, C = 2")

    ax.set_xlabel(r"node density $\rho$")
    ax.set_ylabel("P(all five external nodes connected)")
    ax.set_title(f"Five-hole connection probability (alpha = {args.alpha})")
    ax.set_ylim(0, 1.02)
    ax.legend()
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
        print(f"saved {args.save}")
    else:
        plt.show()


if __name__ == "__main__":
    main()
