"""Scalar summaries across memory times for the Neel chain.

    python scripts/memory_sweep.py --channel dephasing --gammas 1,2,5,inf --tmax 150
"""

import argparse
import math

from openchain.dynamics import evolve
from openchain.model import ChainConfig
from openchain.presets import summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--channel", default="dephasing")
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--gammas", default="1,2,5,inf")
    ap.add_argument("--tmax", type=float, default=60.0)
    ap.add_argument("--dt", type=float, default=2e-3)
    args = ap.parse_args()

    cols = ("min_TMI", "min_TLN", "TLN_extinction", "TLN_negative_duration", "steady_TMI", "steady_TMI_spread")
    print(f"{'gamma':>6} " + " ".join(f"{c:>21}" for c in cols))
    for g in (math.inf if x.strip() == "inf" else float(x) for x in args.gammas.split(",")):
        cfg = ChainConfig(N=6, n=2, channel=args.channel, delta=args.delta, gamma1=g, gamma2=g,
                          t_max=args.tmax, dt=args.dt, sample_every=max(1, int(round(0.02 / args.dt))))
        s = summarize(evolve(cfg))
        print(f"{g:>6} " + " ".join(f"{s[c]:>21.6g}" for c in cols))


if __name__ == "__main__":
    main()
