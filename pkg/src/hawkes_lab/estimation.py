"""Maximum likelihood for the exponential Hawkes process and chain fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from . import _loops
from .errors import CoverageError, ValidationError
from .hawkes import EventStream

MIN_EVENTS = 50
GRAD_TOL = 1e-6
LOG_BOUND = 23.0  # log-parameters are boxed to [-23, 23] (about 1e-10 .. 1e10)


def _times(events) -> np.ndarray:
    times = events.times if isinstance(events, EventStream) else np.asarray(events, dtype=float)
    if times.ndim != 1 or (times.size and (times[0] < 0 or np.any(np.diff(times) <= 0))):
        raise ValidationError("event times must be non-negative and strictly increasing")
    return np.ascontiguousarray(times, dtype=float)


def exp_hawkes_loglik(events, horizon: float, lam: float, alpha: float, beta: float) -> float:
    """``sum_i log lambda(t_i-) - Lambda(T)`` by the O(n) recursion."""
    times = _times(events)
    if times.size and times[-1] > horizon:
        raise ValidationError("events beyond the horizon")
    if not (lam > 0 and alpha >= 0 and beta > 0):
        raise ValidationError("need lam > 0, alpha >= 0, beta > 0")
    return _loops.exp_loglik_grad(times, float(horizon), lam, alpha, beta)[0]


def exp_hawkes_loglik_grad(events, horizon, lam, alpha, beta):
    """Log-likelihood and its gradient with respect to ``(lam, alpha, beta)``."""
    ll, *g = _loops.exp_loglik_grad(_times(events), float(horizon), lam, alpha, beta)
    return ll, np.array(g)


@dataclass
class FitResult:
    params: dict
    loglik: float
    converged: bool
    iterations: int
    grad_norm: float
    se: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def branching_ratio(self) -> float:
        return self.params["alpha"] / self.params["beta"]

    def to_dict(self):
        return {
            "params": self.params,
            "se": self.se,
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "branching_ratio": self.branching_ratio,
            "flags": self.flags,
        }


def _observed_information(times, horizon, x):
    """Hessian of the negative log-likelihood by central differences of the analytic gradient."""
    H = np.empty((3, 3))
    for k in range(3):
        h = 1e-5 * x[k]
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        gp = np.array(_loops.exp_loglik_grad(times, horizon, *xp)[1:])
        gm = np.array(_loops.exp_loglik_grad(times, horizon, *xm)[1:])
        H[:, k] = -(gp - gm) / (2 * h)
    return 0.5 * (H + H.T)


def default_starts(times, horizon):
    rate = len(times) / horizon
    return [
        (0.5 * rate, 0.5 * rate, rate),
        (0.8 * rate, 0.2 * 5 * rate, 5 * rate),
        (0.2 * rate, 0.8 * rate / 5, rate / 5),
    ]


def fit_exp_hawkes(events, horizon: float, init: Optional[Sequence[Sequence[float]]] = None,
                   max_iter: int = 500) -> FitResult:
    """MLE of ``(lam, alpha, beta)`` by L-BFGS-B on boxed log-parameters, multi-start.

    The best iterate is polished with Newton steps; ``converged`` means the
    gradient in log-parameter space has max-norm below ``GRAD_TOL``. An
    optimum on the box edge (typically ``beta -> 0`` on Poisson-like data)
    is flagged ``at_bound`` and will not report as converged.
    """
    times = _times(events)
    if times.size < MIN_EVENTS:
        raise ValidationError(f"need at least {MIN_EVENTS} events, got {times.size}")
    if not horizon > times[-1]:
        raise ValidationError("horizon must exceed the last event time")
    horizon = float(horizon)

    def objective(theta):
        x = np.exp(theta)
        if not np.all((x > 0) & np.isfinite(x)):
            return math.inf, np.zeros(3)
        ll, *g = _loops.exp_loglik_grad(times, horizon, *x)
        if not math.isfinite(ll):
            return math.inf, np.zeros(3)
        return -ll, -np.array(g) * x

    starts = init if init is not None else default_starts(times, horizon)
    best = None
    iterations = 0
    for x0 in starts:
        theta0 = np.clip(np.log(np.asarray(x0, dtype=float)), -LOG_BOUND, LOG_BOUND)
        res = optimize.minimize(objective, theta0, jac=True, method="L-BFGS-B",
                                bounds=[(-LOG_BOUND, LOG_BOUND)] * 3,
                                options={"gtol": GRAD_TOL * 1e-2, "ftol": 1e-15, "maxiter": max_iter})
        iterations += res.nit
        if best is None or res.fun < best.fun:
            best = res
    theta = best.x.copy()
    f, g = objective(theta)
    for _ in range(20):
        if np.max(np.abs(g)) < GRAD_TOL * 1e-2:
            break
        x = np.exp(theta)
        # Hessian in log space: diag(x) H diag(x) + diag(grad wrt x * x)
        H = _observed_information(times, horizon, x)
        Ht = H * np.outer(x, x) + np.diag(g)
        try:
            step = np.linalg.solve(Ht, -g)
        except np.linalg.LinAlgError:
            break
        if np.any(np.abs(theta + step) > LOG_BOUND):
            break
        f_new, g_new = objective(theta + step)
        if not f_new <= f + 1e-12 * abs(f):
            break
        theta, f, g = theta + step, f_new, g_new
        iterations += 1
    x = np.exp(theta)
    grad_norm = float(np.max(np.abs(g)))
    params = {"lambda": float(x[0]), "alpha": float(x[1]), "beta": float(x[2])}
    se = {k: math.nan for k in params}
    try:
        cov = np.linalg.inv(_observed_information(times, horizon, x))
        if np.all(np.diag(cov) > 0):
            se = dict(zip(params, map(float, np.sqrt(np.diag(cov)))))
    except np.linalg.LinAlgError:
        pass
    flags = []
    if np.any(np.abs(theta) >= LOG_BOUND - 1e-9):
        flags.append("at_bound")
    if x[1] / x[2] >= 1.0:
        flags.append("nonstationary")
    converged = grad_norm < GRAD_TOL
    if not converged:
        flags.append("not_converged")
    return FitResult(params, -f, converged, iterations, grad_norm, se, flags)


@dataclass(frozen=True, eq=False)
class TransitionFit:
    P: np.ndarray
    counts: np.ndarray


def fit_transition_matrix(states: Sequence[int], n_states: Optional[int] = None) -> TransitionFit:
    """Row-normalised transition counts of a 0-based state sequence.

    Every state must be left at least once; ``n_states`` defaults to
    ``max(states) + 1``.
    """
    s = np.asarray(states, dtype=np.int64)
    if s.ndim != 1 or s.size < 2:
        raise ValidationError("need a sequence of at least 2 states")
    if np.any(s < 0):
        raise ValidationError("states must be non-negative indices")
    n = int(s.max()) + 1 if n_states is None else int(n_states)
    if s.max() >= n:
        raise ValidationError("state index exceeds n_states")
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (s[:-1], s[1:]), 1)
    rows = counts.sum(axis=1)
    missing = np.flatnonzero(rows == 0)
    if missing.size:
        raise CoverageError(f"no transitions observed out of state(s) {missing.tolist()}")
    return TransitionFit(counts / rows[:, None], counts)


def bin_price_changes(prices, edges) -> tuple[np.ndarray, np.ndarray]:
    """Map consecutive price changes to bucket indices.

    ``edges`` are increasing bucket boundaries (use ``-inf``/``inf`` at the
    ends); bucket ``i`` is ``[edges[i], edges[i+1])``. Returns the states and
    the mean change within each bucket, used as the mark value ``a``.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 3 or np.any(np.diff(edges) <= 0):
        raise ValidationError("need at least 3 strictly increasing bucket edges")
    changes = np.diff(np.asarray(prices, dtype=float))
    states = np.searchsorted(edges, changes, side="right") - 1
    n = edges.size - 1
    if np.any(states < 0) or np.any(states >= n):
        raise ValidationError("price change outside the bucket range")
    hits = np.bincount(states, minlength=n)
    if np.any(hits == 0):
        raise CoverageError(f"bucket(s) {np.flatnonzero(hits == 0).tolist()} never observed")
    a = np.bincount(states, weights=changes, minlength=n) / hits
    return states, a
