"""How much do diligent investors damp mispricing?

Sweeps master seeds and diligence counts, reporting the distribution of
the range of log(S/S*) and the count of outsized daily moves.

Usage:
    python scripts/diligence_severity.py --seeds 20 --years 5
"""

import argparse

import numpy as np

from beliefmkt.feedback import FeedbackConfig, diligence_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--agents", type=int, default=30)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--years", type=float, default=5.0)
    ap.add_argument("--diligent", type=int, nargs="+",
                    default=[0, 5, 10, 25])
    args = ap.parse_args()

    cfg = FeedbackConfig(n_agents=args.agents, n_diligent=0,
                         n_steps=int(round(args.years * 252)), seed=0)
    table = diligence_sweep(cfg, args.diligent, list(range(args.seeds)))
    print(f"{'diligent':>8} {'mean range':>11} {'median':>8} {'max':>8} "
          f"{'mean jumps':>11}")
    for n_dil in args.diligent:
        ranges = np.array([r["log_ratio_range"] for r in table[n_dil]])
        jumps = np.array([r["n_jumps"] for r in table[n_dil]])
        print(f"{n_dil:8d} {ranges.mean():11.4f} {np.median(ranges):8.4f} "
              f"{ranges.max():8.4f} {jumps.mean():11.2f}")


if __name__ == "__main__":
    main()
