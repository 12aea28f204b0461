"""Scaled price drift S_nt / n against a* rho t for increasing n."""
import argparse

from hawkes_lab.config import load_config
from hawkes_lab.mc import verify_lln


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--ns", default="100,1000,10000")
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--paths", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    model = load_config(args.config).model
    print(f"{'n':>9} {'theory':>10} {'empirical':>10} {'se':>9}  pass")
    for n in (float(x) for x in args.ns.split(",")):
        r = verify_lln(model, n, args.t, args.paths, args.seed, workers=args.workers)
        print(f"{n:>9g} {r.theoretical:>10.5f} {r.empirical:>10.5f} {r.se:>9.5f}  {r.passed}")


if __name__ == "__main__":
    main()
