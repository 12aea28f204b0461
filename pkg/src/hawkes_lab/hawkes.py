"""Hawkes process simulation and evaluation.

Covers the linear process with a fixed background, the regime-switched
background driven by a CTMC, and the nonlinear form
``lambda(t) = h(base(t) + sum_{t_i < t} mu(t - t_i))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import integrate

from . import _loops, rng
from .chains import RegimePath, RegimeSpec, simulate_regime_path
from .errors import (
    ConfigurationError,
    DomainError,
    ExplosionError,
    NumericalError,
    ValidationError,
)
from .kernels import Exponential, Kernel, PowerLaw, Zero, branching_ratio

DEFAULT_MAX_EVENTS = 10_000_000
POWER_LAW_TRUNCATION = 1e-12  # relative to the smallest background rate
QUAD_RTOL = 1e-10


@dataclass(frozen=True)
class Identity:
    lip = 1.0
    code = _loops.H_IDENTITY

    def __call__(self, x):
        return x

    def to_dict(self):
        return {"type": "identity"}


@dataclass(frozen=True)
class Saturating:
    """``h(x) = min(max(x, 0), cap)``."""

    cap: float
    code = _loops.H_SATURATING

    def __post_init__(self):
        if not self.cap > 0:
            raise ValidationError("nonlinearity.cap must be > 0", paths=["nonlinearity.cap"])

    @property
    def lip(self):
        return 1.0

    def __call__(self, x):
        return np.minimum(np.maximum(x, 0.0), self.cap)

    def to_dict(self):
        return {"type": "saturating", "cap": self.cap}


@dataclass(frozen=True)
class ScaledSoft:
    """``h(x) = cap * (1 - exp(-slope * max(x, 0)))``."""

    cap: float
    slope: float
    code = _loops.H_SCALED_SOFT

    def __post_init__(self):
        if not self.cap > 0:
            raise ValidationError("nonlinearity.cap must be > 0", paths=["nonlinearity.cap"])
        if not self.slope > 0:
            raise ValidationError("nonlinearity.slope must be > 0", paths=["nonlinearity.slope"])

    @property
    def lip(self):
        return self.cap * self.slope

    def __call__(self, x):
        return self.cap * -np.expm1(-self.slope * np.maximum(x, 0.0))

    def to_dict(self):
        return {"type": "scaled_soft", "cap": self.cap, "slope": self.slope}


Nonlinearity = Union[Identity, Saturating, ScaledSoft]


def _h_args(h):
    return h.code, float(getattr(h, "cap", 0.0)), float(getattr(h, "slope", 0.0))


@dataclass(frozen=True, eq=False)
class HawkesSpec:
    """Background (fixed rate or regime-switched), kernel and nonlinearity."""

    background: Union[float, RegimeSpec]
    kernel: Kernel
    nonlinearity: Nonlinearity = Identity()

    def __post_init__(self):
        if not isinstance(self.background, RegimeSpec):
            lam = float(self.background)
            if not (math.isfinite(lam) and lam > 0):
                raise ValidationError("background intensity must be > 0", paths=["base.lambda"])
            object.__setattr__(self, "background", lam)

    @property
    def regime(self) -> Optional[RegimeSpec]:
        return self.background if isinstance(self.background, RegimeSpec) else None

    @property
    def lambdas(self) -> np.ndarray:
        if self.regime is not None:
            return np.asarray(self.regime.lambdas)
        return np.array([self.background])

    @property
    def is_linear(self) -> bool:
        return isinstance(self.nonlinearity, Identity)

    def mu_hat(self) -> float:
        return branching_ratio(self.kernel)

    def stability_margin(self) -> float:
        """``lip(h) * mu_hat``; below 1 means a stable stationary version exists."""
        return self.nonlinearity.lip * self.mu_hat()

    def with_background(self, background) -> "HawkesSpec":
        return HawkesSpec(background, self.kernel, self.nonlinearity)

    def to_dict(self):
        base = self.regime.to_dict() if self.regime is not None else {"type": "fixed", "lambda": self.background}
        return {"base": base, "kernel": self.kernel.to_dict(), "nonlinearity": self.nonlinearity.to_dict()}


@dataclass(frozen=True, eq=False)
class EventStream:
    """Strictly increasing event times on ``(0, horizon]``.

    ``regimes`` holds the regime index at each event and ``regime_path`` the
    full background path, both only for regime-switched processes.
    """

    times: np.ndarray
    horizon: float
    regimes: Optional[np.ndarray] = None
    regime_path: Optional[RegimePath] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1:
            raise ValidationError("event times must be one-dimensional")
        if times.size and (times[0] <= 0 or np.any(np.diff(times) <= 0) or times[-1] > self.horizon):
            raise ValidationError("event times must be strictly increasing within (0, horizon]")
        object.__setattr__(self, "times", times)
        if self.regimes is not None:
            object.__setattr__(self, "regimes", np.asarray(self.regimes, dtype=np.int64))

    def __len__(self):
        return self.times.shape[0]

    def count(self, t) -> np.ndarray:
        """``N(t)``, the number of events in ``(0, t]``."""
        return np.searchsorted(self.times, t, side="right")


def _expected_rate(spec: HawkesSpec) -> float:
    lam = float(spec.lambdas.max())
    h = spec.nonlinearity
    if isinstance(h, (Saturating, ScaledSoft)):
        return h.cap
    try:
        mu = spec.mu_hat()
    except ValidationError:
        mu = math.inf
    return lam / (1 - mu) if mu < 0.95 else 20 * lam


def _regime_arrays(spec, horizon, seed, path_index):
    if spec.regime is None:
        return RegimePath(np.zeros(1), np.zeros(1, dtype=np.int64), float(horizon))
    return simulate_regime_path(spec.regime, horizon, rng.generator(seed, path_index, rng.REGIME))


def simulate(
    spec: HawkesSpec,
    horizon: float,
    seed,
    *,
    path_index: int = 0,
    max_events: int = DEFAULT_MAX_EVENTS,
    truncate: bool = False,
) -> EventStream:
    """Exact path on ``(0, horizon]`` by Ogata thinning.

    Exponential kernels keep an O(1) excitation state; power-law kernels scan
    the history (``truncate`` drops events whose remaining contribution is
    below ``POWER_LAW_TRUNCATION`` times the smallest background rate).
    The regime path and the thinning draws come from separate sub-streams of
    ``seed``, so a one-regime spec reproduces the fixed-rate path.
    """
    if not horizon > 0:
        raise DomainError("horizon must be > 0")
    path = _regime_arrays(spec, horizon, seed, path_index)
    lambdas = spec.lambdas
    trunc = POWER_LAW_TRUNCATION * float(lambdas.min()) if truncate else 0.0
    h_kind, h_cap, h_slope = _h_args(spec.nonlinearity)
    kind = spec.kernel.kind
    kp = spec.kernel.params
    gen = rng.generator(seed, path_index, rng.EVENTS)
    n_guess = _expected_rate(spec) * horizon
    size = min(int(3 * n_guess + 4 * len(path.times) + 64), 2 * max_events + 64)
    times, regs, _, status = rng.with_uniforms(
        gen, size,
        lambda u: _loops.thinning(kind, kp, h_kind, h_cap, h_slope, path.times, path.states,
                                  lambdas, float(horizon), int(max_events), trunc, u),
    )
    if status == _loops.EVENT_CAP:
        raise ExplosionError(
            f"event count exceeded the cap of {max_events} before t={horizon}; "
            f"branching ratio {spec.mu_hat():.4g} suggests a non-stationary spec"
        )
    if spec.regime is None:
        return EventStream(times.copy(), float(horizon))
    return EventStream(times.copy(), float(horizon), regs.copy(), path)


def _history_times(history) -> np.ndarray:
    if history is None:
        return np.empty(0)
    if isinstance(history, EventStream):
        return history.times
    return np.asarray(history, dtype=float)


def _resolve_path(spec, history, regime_path):
    if spec.regime is None:
        return None
    if regime_path is None and isinstance(history, EventStream):
        regime_path = history.regime_path
    if regime_path is None:
        raise ConfigurationError("regime-switched spec needs a regime path")
    return regime_path


def _background(spec, path, t):
    if path is None:
        return spec.background
    return float(spec.lambdas[path.state_at(t)])


def _background_integral(spec, path, t):
    if path is None:
        return spec.background * t
    return path.background_integral(spec.lambdas, t)


def intensity_at(spec: HawkesSpec, history, t: float, regime_path: RegimePath | None = None) -> float:
    """Conditional intensity at ``t`` given events strictly before ``t``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    path = _resolve_path(spec, history, regime_path)
    times = _history_times(history)
    past = times[times < t]
    x = _background(spec, path, t) + float(np.sum(spec.kernel(t - past)))
    return float(spec.nonlinearity(x))


def _excitation_integral(kernel, times, t):
    past = times[times < t]
    return float(np.sum(kernel.integral(t - past)))


def _breakpoints(times, path, lo, hi):
    pts = [lo]
    if path is not None:
        pts.extend(path.times[(path.times > lo) & (path.times < hi)])
    pts.extend(times[(times > lo) & (times < hi)])
    pts.append(hi)
    return np.unique(pts)


def _quad_intensity(spec, times, path, lo, hi):
    """Adaptive quadrature of the intensity over ``[lo, hi]``, split at jumps."""
    total = 0.0
    pts = _breakpoints(times, path, lo, hi)
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        past = times[times <= a]
        base = _background(spec, path, a)

        def f(s):
            return spec.nonlinearity(base + float(np.sum(spec.kernel(s - past))))

        val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
        if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
            raise NumericalError(
                f"quadrature of intensity on [{a:.6g}, {b:.6g}] failed: value={val!r}, error={err!r}"
            )
        total += val
    return total


def compensator(spec: HawkesSpec, history, t: float, regime_path: RegimePath | None = None) -> float:
    """``Lambda(t) = int_0^t lambda(s) ds``.

    Closed form for the identity nonlinearity, adaptive quadrature otherwise.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    if isinstance(history, EventStream) and t > history.horizon:
        raise DomainError("t beyond the stream horizon")
    path = _resolve_path(spec, history, regime_path)
    times = _history_times(history)
    if t == 0:
        return 0.0
    if spec.is_linear:
        return float(_background_integral(spec, path, t)) + _excitation_integral(spec.kernel, times, t)
    return _quad_intensity(spec, times, path, 0.0, t)


def _linear_compensator_at_events(spec, times, path):
    base = np.asarray(_background_integral(spec, path, times), dtype=float)
    k = spec.kernel
    if isinstance(k, Zero) or times.size == 0:
        return base
    if isinstance(k, Exponential):
        return base + np.cumsum(_loops.exp_compensator_increments(times, k.alpha, k.beta))
    exc = np.empty(times.size)
    for i in range(times.size):
        exc[i] = np.sum(k.integral(times[i] - times[:i]))
    return base + exc


def time_rescale(events: EventStream, spec: HawkesSpec, regime_path: RegimePath | None = None) -> np.ndarray:
    """Residuals ``Lambda(t_i) - Lambda(t_{i-1})``; i.i.d. Exp(1) under the true model."""
    path = _resolve_path(spec, events, regime_path)
    times = events.times
    if times.size == 0:
        return np.empty(0)
    if spec.is_linear:
        lam = _linear_compensator_at_events(spec, times, path)
        return np.diff(lam, prepend=0.0)
    edges = np.concatenate([[0.0], times])
    return np.array([_quad_intensity(spec, times, path, a, b) for a, b in zip(edges[:-1], edges[1:])])
