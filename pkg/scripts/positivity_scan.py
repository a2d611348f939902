"""Minimum eigenvalue of the ancilla-extended state versus step size.

A dip that does not shrink with dt belongs to the generator, not to the
integrator.

    python scripts/positivity_scan.py --gamma 1 --channel dephasing --tmax 3
"""

import argparse

import numpy as np

from openchain.dynamics import evolve
from openchain.model import ChainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--channel", default="dephasing")
    ap.add_argument("--init", default="neel")
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--tmax", type=float, default=3.0)
    ap.add_argument("--dts", default="2e-3,1e-3,5e-4")
    args = ap.parse_args()

    base = ChainConfig(N=6, n=2, channel=args.channel, init=args.init, delta=args.delta,
                       gamma1=args.gamma, gamma2=args.gamma, t_max=args.tmax)
    print(f"{'dt':>8} {'min eig':>12} {'at t':>7} {'trace err':>10}")
    for dt in (float(x) for x in args.dts.split(",")):
        rec = evolve(base.with_(dt=dt, sample_every=max(1, int(round(0.01 / dt)))))
        i = int(np.argmin(rec["min_eig"]))
        print(f"{dt:8.1e} {rec['min_eig'][i]:12.4e} {rec.times[i]:7.3f} {rec['trace_err'].max():10.1e}")


if __name__ == "__main__":
    main()
