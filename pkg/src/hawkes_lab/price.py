"""Compound mid-price process ``S_t = S_0 + sum_{k <= N(t)} a(X_k)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _loops, rng
from .chains import MarkChainSpec, simulate_chain
from .errors import DomainError
from .hawkes import EventStream, HawkesSpec, simulate


@dataclass(frozen=True, eq=False)
class PriceModelSpec:
    s0: float
    hawkes: HawkesSpec
    marks: MarkChainSpec

    def to_dict(self):
        return {"s0": self.s0, "hawkes": self.hawkes.to_dict(), "marks": self.marks.to_dict()}


@dataclass(frozen=True, eq=False)
class PricePath:
    s0: float
    events: EventStream
    states: np.ndarray
    increments: np.ndarray
    prices: np.ndarray

    @property
    def horizon(self):
        return self.events.horizon


def compose_price(model: PriceModelSpec, events: EventStream, mark_seed) -> PricePath:
    """Attach chain marks to an existing event stream.

    ``mark_seed`` fully determines the state sequence; it does not depend
    on the event times.
    """
    states = simulate_chain(model.marks, len(events), mark_seed)
    increments = model.marks.a[states]
    prices = _loops.kahan_cumsum(increments, float(model.s0))
    return PricePath(float(model.s0), events, states, increments, prices)


def simulate_price(model: PriceModelSpec, horizon: float, seed, *, path_index: int = 0, **engine_kw) -> PricePath:
    events = simulate(model.hawkes, horizon, seed, path_index=path_index, **engine_kw)
    return compose_price(model, events, rng.generator(seed, path_index, rng.MARKS))


def sample_at(path: PricePath, t) -> float:
    """Right-continuous price at time ``t``; ``s0`` before the first event."""
    if not 0 <= t <= path.horizon:
        raise DomainError(f"t={t} outside [0, {path.horizon}]")
    k = int(path.events.count(t))
    return path.s0 if k == 0 else float(path.prices[k - 1])
