"""Command-line entry point: ``hawkes-lab <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 numerical or statistical failure.
Errors print one line ``error <CODE>: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__, csvio
from .config import SCHEMA_VERSION, RunConfig, atomic_write, dumps, load_config
from .errors import ConfigurationError, HawkesLabError, ValidationError, VerificationFailed
from .estimation import bin_price_changes, fit_exp_hawkes, fit_transition_matrix
from .hawkes import EventStream, simulate, time_rescale
from .limits import diffusion_limit
from .mc import resolve_workers, verify_fclt, verify_lln
from .price import simulate_price

log = logging.getLogger("hawkes_lab")

EPILOG = f"""\
config schema version {SCHEMA_VERSION}. A config is a JSON object
{{"schema_version": {SCHEMA_VERSION}, "model": {{...}}, "run": {{...}}}} where model has
"s0", "hawkes" {{"base", "kernel", "nonlinearity"}} and "marks" {{"P", "a"}}; the
optional "run" block may supply horizon, n, t, paths, seed, workers, mode, out.
Flags override "run". HAWKES_LAB_WORKERS is used when --workers is absent.
States and regimes are 0-based indices in all files.
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(f"usage: {message}")


def _add_common(p, *, config=True, seed=False, workers=False):
    if config:
        p.add_argument("--config", required=True, help="model/run JSON config")
    if seed:
        p.add_argument("--seed", type=int, help="master RNG seed")
    if workers:
        p.add_argument("--workers", type=int, help="worker threads (output does not depend on it)")
    p.add_argument("--out", help="output path (JSON commands default to stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hawkes-lab", description="Simulate compound Hawkes mid-price models and check their diffusion limits.", epilog=EPILOG,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} (schema {SCHEMA_VERSION})")
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a Hawkes event stream to CSV (time,regime)")
    _add_common(p, seed=True)
    p.add_argument("--horizon", type=float)
    p.add_argument("--regime-out", help="also write the regime path CSV (time,regime)")

    p = sub.add_parser("simulate-price", help="simulate a mid-price path to CSV (time,increment,price)")
    _add_common(p, seed=True)
    p.add_argument("--horizon", type=float)

    p = sub.add_parser("limits", help="closed-form LLN drift and FCLT volatility as JSON")
    _add_common(p, seed=True, workers=True)
    p.add_argument("--mc-horizon", type=float, default=2000.0, help="horizon for nonlinear rate estimation")
    p.add_argument("--paths", type=int, default=100, help="paths for nonlinear rate estimation")
    p.add_argument("--force-mc", action="store_true", help="estimate the event rate even when closed form exists")

    p = sub.add_parser("verify", help="Monte Carlo LLN/FCLT check; exit 2 when it fails")
    _add_common(p, seed=True, workers=True)
    p.add_argument("--mode", choices=["lln", "fclt"])
    p.add_argument("--n", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--rel-tol", type=float, default=0.05)
    p.add_argument("--csv", help="one-row CSV summary (default: <out>.csv)")
    p.add_argument("--emit-samples", help="per-path statistic values as CSV")

    p = sub.add_parser("fit", help="exponential-kernel Hawkes MLE from an events CSV")
    _add_common(p, config=False)
    p.add_argument("--events", required=True)
    p.add_argument("--horizon", type=float, required=True)

    p = sub.add_parser("fit-marks", help="estimate a mark chain from a price CSV")
    _add_common(p, config=False)
    p.add_argument("--prices", required=True)
    p.add_argument("--buckets", required=True, help='comma-separated edges; pass as --buckets=-inf,-0.005,0.005,inf')

    p = sub.add_parser("residuals", help="time-rescaled residuals and KS test against Exp(1)")
    _add_common(p)
    p.add_argument("--events", required=True)
    p.add_argument("--horizon", type=float)
    p.add_argument("--regime-path", help="regime path CSV (required for regime-switched models)")
    p.add_argument("--emit-samples", help="residuals as CSV")
    return parser


def _pick(flag, cfg_value, name, default=None):
    value = flag if flag is not None else cfg_value
    if value is None:
        value = default
    if value is None:
        raise ConfigurationError(f"missing parameter {name!r} (flag or run.{name})")
    return value


def _meta(cfg: RunConfig | None, seed=None) -> dict:
    meta = {"version": __version__, "schema_version": SCHEMA_VERSION}
    if cfg is not None:
        meta["config_hash"] = cfg.content_hash()
    if seed is not None:
        meta["seed"] = seed
    return meta


def _emit_json(obj, out):
    if out:
        atomic_write(out, dumps(obj))
    else:
        sys.stdout.write(dumps(obj))


def _load(args):
    cfg = load_config(args.config)
    log.info("config %s hash=%s", args.config, cfg.content_hash())
    log.info("config echo %s", json.dumps(cfg.to_dict(), sort_keys=True))
    return cfg


def cmd_simulate(args):
    cfg = _load(args)
    horizon = _pick(args.horizon, cfg.run.horizon, "horizon")
    seed = _pick(args.seed, cfg.run.seed, "seed")
    out = _pick(args.out, cfg.run.out, "out")
    log.info("seed=%s version=%s", seed, __version__)
    events = simulate(cfg.model.hawkes, horizon, seed)
    csvio.write_events(out, events)
    if args.regime_out and events.regime_path is not None:
        csvio.write_regime_path(args.regime_out, events.regime_path)


def cmd_simulate_price(args):
    cfg = _load(args)
    horizon = _pick(args.horizon, cfg.run.horizon, "horizon")
    seed = _pick(args.seed, cfg.run.seed, "seed")
    out = _pick(args.out, cfg.run.out, "out")
    log.info("seed=%s version=%s", seed, __version__)
    csvio.write_price_path(out, simulate_price(cfg.model, horizon, seed))


def cmd_limits(args):
    cfg = _load(args)
    seed = _pick(args.seed, cfg.run.seed, "seed", default=0)
    budget = {"horizon": args.mc_horizon, "n_paths": args.paths, "seed": seed,
              "workers": resolve_workers(args.workers if args.workers is not None else cfg.run.workers)}
    lim = diffusion_limit(cfg.model, budget, force_mc=args.force_mc)
    report = lim.to_dict()
    report["meta"] = _meta(cfg, seed if lim.rate_provenance != "closed_form" else None)
    _emit_json(report, args.out or cfg.run.out)


def cmd_verify(args):
    cfg = _load(args)
    run = cfg.run
    mode = _pick(args.mode, run.mode, "mode")
    n = _pick(args.n, run.n, "n")
    t = _pick(args.t, run.t, "t")
    paths = _pick(args.paths, run.paths, "paths")
    seed = _pick(args.seed, run.seed, "seed")
    workers = args.workers if args.workers is not None else run.workers
    out = args.out or run.out
    log.info("verify mode=%s n=%s t=%s paths=%s seed=%s version=%s", mode, n, t, paths, seed, __version__)
    fn = verify_fclt if mode == "fclt" else verify_lln
    rep = fn(cfg.model, n, t, paths, seed, workers=workers, rel_tol=args.rel_tol)
    report = rep.to_dict()
    report["mode"] = mode
    report["meta"] = _meta(cfg, seed)
    _emit_json(report, out)
    csv_path = args.csv or (str(Path(out).with_suffix(".csv")) if out else None)
    if csv_path:
        flat = {k: v for k, v in report.items() if not isinstance(v, dict)}
        flat.update({f"extras.{k}": v for k, v in rep.extras.items()})
        atomic_write(csv_path, csvio.report_row_csv(flat))
    if args.emit_samples and rep.samples is not None:
        csvio.write_column(args.emit_samples, "z" if mode == "fclt" else "s_over_n", rep.samples)
    if not rep.passed:
        raise VerificationFailed(
            f"{rep.statistic}: empirical {rep.empirical:.6g} vs theoretical {rep.theoretical:.6g} (SE {rep.se:.3g})"
        )


def cmd_fit(args):
    times, _ = csvio.read_events(args.events)
    fit = fit_exp_hawkes(times, args.horizon)
    report = fit.to_dict()
    report["n_events"] = int(times.size)
    report["meta"] = _meta(None)
    _emit_json(report, args.out)


def cmd_fit_marks(args):
    _, prices = csvio.read_prices(args.prices)
    try:
        edges = [float(x) for x in args.buckets.split(",")]
    except ValueError as exc:
        raise ConfigurationError(f"bad --buckets: {exc}") from exc
    states, a = bin_price_changes(prices, edges)
    fit = fit_transition_matrix(states, n_states=len(edges) - 1)
    report = {
        "marks": {"P": fit.P.tolist(), "a": a.tolist()},
        "counts": fit.counts.tolist(),
        "bucket_edges": [e if math.isfinite(e) else str(e) for e in edges],
        "meta": _meta(None),
    }
    _emit_json(report, args.out)


def cmd_residuals(args):
    cfg = _load(args)
    times, regimes = csvio.read_events(args.events)
    horizon = args.horizon or cfg.run.horizon or (float(times[-1]) if times.size else 0.0)
    path = None
    if cfg.model.hawkes.regime is not None:
        if not args.regime_path:
            raise ConfigurationError("regime-switched model needs --regime-path")
        path = csvio.read_regime_path(args.regime_path, horizon)
    events = EventStream(times, horizon, regimes, path)
    r = time_rescale(events, cfg.model.hawkes, path)
    report = {"n_events": int(r.size), "mean_residual": float(np.mean(r)) if r.size else None}
    if r.size >= 2:
        ks = stats.kstest(r, "expon")
        report.update(ks_statistic=float(ks.statistic), ks_pvalue=float(ks.pvalue))
    report["meta"] = _meta(cfg)
    _emit_json(report, args.out or cfg.run.out)
    if args.emit_samples:
        csvio.write_column(args.emit_samples, "residual", r)


COMMANDS = {
    "simulate": cmd_simulate,
    "simulate-price": cmd_simulate_price,
    "limits": cmd_limits,
    "verify": cmd_verify,
    "fit": cmd_fit,
    "fit-marks": cmd_fit_marks,
    "residuals": cmd_residuals,
}


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except HawkesLabError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except HawkesLabError as exc:
        print(f"error {exc.code}: {' '.join(str(exc).split())}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error IO: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())
