"""Empirical diffusion variance against the limit as the time scale n grows.

Runs the FCLT check for a configured model at several n and prints one row
per n. With --json the reports are written as a list instead.

    python scripts/fclt_convergence.py configs/chpdo.json --paths 500
"""
import argparse
import json
import sys

from hawkes_lab.config import load_config
from hawkes_lab.mc import verify_fclt_grid


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--ns", default="100,1000,10000", help="comma-separated time scales")
    ap.add_argument("--ts", default="0.5,1", help="comma-separated grid of t values")
    ap.add_argument("--paths", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)

    model = load_config(args.config).model
    ts = [float(x) for x in args.ts.split(",")]
    rows = []
    for n in (float(x) for x in args.ns.split(",")):
        for rep in verify_fclt_grid(model, n, ts, args.paths, args.seed, workers=args.workers):
            rows.append(rep.to_dict())
    if args.json:
        json.dump(rows, sys.stdout, indent=2)
        print()
        return
    print(f"{'n':>9} {'t':>5} {'theory':>9} {'empirical':>10} {'se':>8} {'ks_p':>6}  pass")
    for r in rows:
        print(f"{r['n']:>9g} {r['t']:>5g} {r['theoretical']:>9.4f} {r['empirical']:>10.4f} "
              f"{r['se']:>8.4f} {r['extras']['ks_pvalue']:>6.3f}  {r['passed']}")


if __name__ == "__main__":
    main()
