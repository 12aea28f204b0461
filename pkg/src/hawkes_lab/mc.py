"""Monte Carlo checks of the LLN and FCLT predictions.

Paths are independent given ``(seed, path_index)`` and are reduced in path
order, so reports do not depend on the number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import rng
from .chains import simulate_chain
from .errors import ExplosionError, NonStationaryError, ValidationError
from .hawkes import DEFAULT_MAX_EVENTS, HawkesSpec, simulate
from .limits import check_fclt_preconditions, diffusion_limit
from .price import PriceModelSpec

MIN_PATHS = 30
DEFAULT_REL_TOL = 0.05
SE_MULTIPLIER = 3.0
BURN_IN_FRACTION = 0.1


@dataclass
class MCReport:
    statistic: str
    theoretical: float
    empirical: float
    se: float
    n_paths: int
    n: float
    t: float
    rel_tol: float
    passed: bool = field(init=False)
    rule: str = field(init=False)
    extras: dict = field(default_factory=dict)
    samples: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.rule = f"|empirical - theoretical| <= max({SE_MULTIPLIER:g}*SE, {self.rel_tol:g}*|theoretical|)"
        tol = max(SE_MULTIPLIER * self.se, self.rel_tol * abs(self.theoretical))
        self.passed = bool(abs(self.empirical - self.theoretical) <= tol)

    def to_dict(self):
        d = asdict(self)
        d.pop("samples")
        return d


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = int(os.environ.get("HAWKES_LAB_WORKERS", "1"))
    return max(1, int(workers))


def _map_paths(fn, n_paths: int, workers: Optional[int]):
    workers = resolve_workers(workers)
    if workers == 1:
        return [fn(i) for i in range(n_paths)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_paths)))


def path_summaries(model: PriceModelSpec, horizon: float, eval_times: Sequence[float],
                   n_paths: int, seed, workers: Optional[int] = None):
    """``N(t)`` and ``S_t - S_0`` at ``eval_times`` for each path.

    Returns two ``(n_paths, len(eval_times))`` arrays.
    """
    eval_times = np.asarray(eval_times, dtype=float)
    a = model.marks.a

    def one(i):
        events = simulate(model.hawkes, horizon, seed, path_index=i)
        states = simulate_chain(model.marks, len(events), rng.generator(seed, i, rng.MARKS))
        counts = events.count(eval_times)
        # exact per-state tallies keep the sums free of rounding drift
        sums = np.empty(len(eval_times))
        for j, k in enumerate(counts):
            sums[j] = np.bincount(states[:k], minlength=len(a)) @ a
        return counts, sums

    results = _map_paths(one, n_paths, workers)
    counts = np.array([r[0] for r in results], dtype=float)
    sums = np.array([r[1] for r in results], dtype=float)
    return counts, sums


def _check_paths(n_paths):
    if n_paths < MIN_PATHS:
        raise ValidationError(f"need at least {MIN_PATHS} paths, got {n_paths}")


def verify_lln(model: PriceModelSpec, n: float, t: float, n_paths: int, seed, *,
               workers: Optional[int] = None, rel_tol: float = DEFAULT_REL_TOL,
               mc_budget: Optional[dict] = None) -> MCReport:
    """Compare the path mean of ``(S_nt - S_0) / n`` with ``a* rho t``."""
    _check_paths(n_paths)
    lim = diffusion_limit(model, mc_budget)
    _, sums = path_summaries(model, n * t, [n * t], n_paths, seed, workers)
    x = sums[:, 0] / n
    se = float(np.std(x, ddof=1) / math.sqrt(n_paths))
    se = math.hypot(se, lim.a_star * t * lim.rate_se)
    return MCReport("lln_mean", lim.lln_drift_rate * t, float(np.mean(x)), se,
                    n_paths, n, t, rel_tol, samples=x)


def _variance_se(z):
    d = (z - z.mean()) ** 2
    return float(np.std(d, ddof=1) / math.sqrt(len(z)))


def _fclt_report(z, lim, n, t, n_paths, rel_tol, max_mark):
    theory = lim.sigma_star_sq * lim.event_rate * t
    if lim.sigma_star_sq == 0.0:
        # degenerate chain: Z is identically zero up to rounding
        bound = 1e-9 * max(1.0, max_mark * lim.event_rate * n * t) / math.sqrt(n)
        worst = float(np.max(np.abs(z)))
        rep = MCReport("fclt_max_abs_z", 0.0, worst, bound / SE_MULTIPLIER, n_paths, n, t, 0.0, samples=z)
        return rep
    emp = float(np.var(z, ddof=1))
    se = math.hypot(_variance_se(z), lim.sigma_star_sq * t * lim.rate_se)
    ks = stats.kstest(z, "norm", args=(0.0, math.sqrt(theory)))
    return MCReport("fclt_variance", theory, emp, se, n_paths, n, t, rel_tol,
                    extras={"ks_statistic": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
                            "mean_z": float(np.mean(z))},
                    samples=z)


def verify_fclt_grid(model: PriceModelSpec, n: float, ts: Sequence[float], n_paths: int, seed, *,
                     workers: Optional[int] = None, rel_tol: float = DEFAULT_REL_TOL,
                     mc_budget: Optional[dict] = None) -> list[MCReport]:
    """FCLT variance check at several rescaled times from one set of paths.

    Each report also carries the advisory ratio of the empirical covariance
    with the previous grid point to ``sigma*^2 rho min(s, t)``.
    """
    _check_paths(n_paths)
    check_fclt_preconditions(model.hawkes)
    lim = diffusion_limit(model, mc_budget)
    ts = [float(t) for t in ts]
    counts, sums = path_summaries(model, n * max(ts), [n * t for t in ts], n_paths, seed, workers)
    z = (sums - counts * lim.a_star) / math.sqrt(n)
    max_mark = float(np.max(np.abs(model.marks.a)))
    reports = []
    for j, t in enumerate(ts):
        rep = _fclt_report(z[:, j], lim, n, t, n_paths, rel_tol, max_mark)
        if j > 0 and lim.sigma_star_sq > 0:
            cov = float(np.cov(z[:, j - 1], z[:, j])[0, 1])
            rep.extras["cov_ratio_prev"] = cov / (lim.sigma_star_sq * lim.event_rate * min(ts[j - 1], t))
        reports.append(rep)
    return reports


def verify_fclt(model: PriceModelSpec, n: float, t: float, n_paths: int, seed, *,
                workers: Optional[int] = None, rel_tol: float = DEFAULT_REL_TOL,
                mc_budget: Optional[dict] = None) -> MCReport:
    """Var of ``(S_nt - S_0 - N(nt) a*) / sqrt(n)`` against ``sigma*^2 rho t``.

    The KS p-value against the limiting normal is reported in ``extras`` and
    does not affect ``passed``.
    """
    return verify_fclt_grid(model, n, [t], n_paths, seed, workers=workers,
                            rel_tol=rel_tol, mc_budget=mc_budget)[0]


def _fixed_rate(hawkes, horizon, burn_in, n_paths, seed, workers, max_events):
    def one(i):
        try:
            ev = simulate(hawkes, horizon, seed, path_index=i, max_events=max_events)
        except ExplosionError as exc:
            raise NonStationaryError(str(exc)) from exc
        n_total = len(ev)
        return (n_total - int(ev.count(burn_in))) / (horizon - burn_in)

    r = np.array(_map_paths(one, n_paths, workers))
    return float(r.mean()), float(r.std(ddof=1) / math.sqrt(n_paths))


def estimate_mean_rate(hawkes: HawkesSpec, horizon: float = 2000.0, burn_in: Optional[float] = None,
                       n_paths: int = 100, seed=0, workers: Optional[int] = None,
                       max_events: int = DEFAULT_MAX_EVENTS) -> tuple[float, float]:
    """Stationary ``E[N[0,1]]`` with its standard error.

    Counts after ``burn_in`` (default 10% of the horizon) are averaged over
    paths. For a regime-switched spec each fixed-regime process is run
    separately and the rates are mixed with the regime's stationary law.
    """
    if burn_in is None:
        burn_in = BURN_IN_FRACTION * horizon
    if not 0 <= burn_in < horizon:
        raise ValidationError("need 0 <= burn_in < horizon")
    if n_paths < 2:
        raise ValidationError("need at least 2 paths for a standard error")
    if hawkes.stability_margin() >= 1.0:
        raise NonStationaryError(f"lip(h) * mu_hat = {hawkes.stability_margin():.6g} >= 1")
    if hawkes.regime is None:
        return _fixed_rate(hawkes, horizon, burn_in, n_paths, seed, workers, max_events)
    rate, var = 0.0, 0.0
    regime = hawkes.regime
    for i, (p, lam) in enumerate(zip(regime.pstar, regime.lambdas)):
        sub_seed = rng.child_seed(seed, i, rng.REGIME)
        r, se = _fixed_rate(hawkes.with_background(float(lam)), horizon, burn_in,
                            n_paths, sub_seed, workers, max_events)
        rate += p * r
        var += (p * se) ** 2
    return rate, math.sqrt(var)
