"""Finite Markov chains: the discrete mark chain and the regime CTMC.

States are 0-based indices throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import _loops
from .errors import DomainError, ErgodicityError, ValidationError
from .rng import as_generator, with_uniforms

STOCHASTIC_TOL = 1e-12
STATIONARY_RESIDUAL_TOL = 1e-10
MAX_CONDITION = 1e12


def _is_irreducible(adjacency: np.ndarray) -> bool:
    n_comp, _ = connected_components(adjacency > 0, directed=True, connection="strong")
    return n_comp == 1


def _is_aperiodic(P: np.ndarray) -> bool:
    # an irreducible chain is primitive iff P^((n-1)^2 + 1) > 0 (Wielandt)
    n = P.shape[0]
    if np.any(np.diag(P) > 0):
        return True
    M = (P > 0).astype(np.int64)
    power = (n - 1) ** 2 + 1
    result = np.eye(n, dtype=np.int64)
    while power:
        if power & 1:
            result = ((result @ M) > 0).astype(np.int64)
        M = ((M @ M) > 0).astype(np.int64)
        power >>= 1
    return bool(np.all(result > 0))


def check_stochastic(P, name="P") -> np.ndarray:
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix", paths=[name])
    if not np.all(np.isfinite(P)) or np.any(P < 0) or np.any(P > 1):
        raise ValidationError(f"{name} entries must lie in [0, 1]", paths=[name])
    if np.max(np.abs(P.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
        raise ValidationError(f"{name} rows must sum to 1", paths=[name])
    return P


def _solve_augmented(M: np.ndarray) -> np.ndarray:
    """Solve ``x M = 0, sum(x) = 1`` with one balance row replaced."""
    n = M.shape[0]
    lhs = M.T.copy()
    lhs[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    if np.linalg.cond(lhs) > MAX_CONDITION:
        raise ErgodicityError("stationary system is singular or ill-conditioned")
    return np.linalg.solve(lhs, rhs)


def stationary_distribution(P, allow_periodic: bool = False) -> np.ndarray:
    """Unique stationary row vector ``pi`` of the transition matrix ``P``."""
    P = check_stochastic(P)
    if not _is_irreducible(P):
        raise ErgodicityError("transition matrix is reducible")
    if not allow_periodic and not _is_aperiodic(P):
        raise ErgodicityError("transition matrix is periodic")
    pi = _solve_augmented(P - np.eye(P.shape[0]))
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if np.max(np.abs(pi @ P - pi)) > STATIONARY_RESIDUAL_TOL:
        raise ErgodicityError("stationary residual too large")
    return pi


@dataclass(frozen=True, eq=False)
class MarkChainSpec:
    """Ergodic chain driving per-event price increments ``a[X_k]``."""

    P: np.ndarray
    a: np.ndarray
    allow_periodic: bool = False
    pi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = check_stochastic(self.P, "marks.P")
        a = np.array(self.a, dtype=float)
        if P.shape[0] < 2:
            raise ValidationError("mark chain needs at least 2 states", paths=["marks.P"])
        if a.shape != (P.shape[0],) or not np.all(np.isfinite(a)):
            raise ValidationError("marks.a must have one finite value per state", paths=["marks.a"])
        P.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "pi", stationary_distribution(P, self.allow_periodic))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def to_dict(self):
        return {"P": self.P.tolist(), "a": self.a.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["P"], dtype=float), np.array(d["a"], dtype=float))


def two_state_chain(p: float, p_prime: float, delta: float) -> MarkChainSpec:
    """Chain on ``(+delta, -delta)``.

    ``p`` is the probability of staying at ``+delta`` and ``p_prime`` of
    staying at ``-delta``; state 0 is ``+delta``.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= p_prime <= 1.0):
        raise ValidationError("p and p_prime must be probabilities")
    if not delta > 0:
        raise ValidationError("tick size delta must be > 0")
    P = np.array([[p, 1.0 - p], [1.0 - p_prime, p_prime]])
    return MarkChainSpec(P, np.array([delta, -delta]))


def simulate_chain(spec: MarkChainSpec, n_steps: int, seed, initial_state: int | None = None) -> np.ndarray:
    """``n_steps`` states of the mark chain, started from ``pi`` unless given.

    One uniform is consumed per step, so paths of different lengths from the
    same seed share their common prefix.
    """
    if n_steps < 0:
        raise DomainError("n_steps must be >= 0")
    if initial_state is not None and not 0 <= initial_state < spec.n:
        raise DomainError("initial_state out of range")
    gen = as_generator(seed)
    u = gen.random(n_steps)
    return _loops.chain_path(
        np.cumsum(spec.pi), np.cumsum(spec.P, axis=1), n_steps,
        -1 if initial_state is None else int(initial_state), u,
    )


@dataclass(frozen=True, eq=False)
class RegimeSpec:
    """CTMC generator ``A`` and one background intensity per regime."""

    A: np.ndarray
    lambdas: np.ndarray
    pstar: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        lambdas = np.array(self.lambdas, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise ValidationError("regime generator must be square", paths=["base.A"])
        off = A - np.diag(np.diag(A))
        if not np.all(np.isfinite(A)) or np.any(off < 0):
            raise ValidationError("generator off-diagonal entries must be >= 0", paths=["base.A"])
        if np.max(np.abs(A.sum(axis=1))) > STOCHASTIC_TOL * max(1.0, np.abs(A).max()):
            raise ValidationError("generator rows must sum to 0", paths=["base.A"])
        if lambdas.shape != (A.shape[0],) or not np.all(np.isfinite(lambdas)) or np.any(lambdas <= 0):
            raise ValidationError("one background intensity > 0 per regime", paths=["base.lambdas"])
        A.setflags(write=False)
        lambdas.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "pstar", ctmc_stationary(A))

    @property
    def N(self) -> int:
        return self.A.shape[0]

    def to_dict(self):
        return {"type": "regime", "A": self.A.tolist(), "lambdas": self.lambdas.tolist()}


def ctmc_stationary(A) -> np.ndarray:
    """Stationary distribution ``p*`` of a generator: ``p* A = 0``."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 1:
        return np.ones(1)
    off = A - np.diag(np.diag(A))
    if not _is_irreducible(off):
        raise ErgodicityError("regime generator is reducible")
    p = _solve_augmented(A)
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    if np.max(np.abs(p @ A)) > STATIONARY_RESIDUAL_TOL * max(1.0, np.abs(A).max()):
        raise ErgodicityError("stationary residual too large")
    return p


@dataclass(frozen=True, eq=False)
class RegimePath:
    """Right-continuous regime path: ``states[j]`` holds on ``[times[j], times[j+1])``."""

    times: np.ndarray
    states: np.ndarray
    horizon: float

    def state_at(self, t):
        idx = np.searchsorted(self.times, t, side="right") - 1
        return self.states[np.clip(idx, 0, None)]

    def occupation(self, n_states: int) -> np.ndarray:
        edges = np.append(self.times, self.horizon)
        out = np.zeros(n_states)
        np.add.at(out, self.states, np.diff(edges))
        return out / self.horizon

    def background_integral(self, lambdas, t):
        """``int_0^t lambdas[Y_s] ds`` (vectorised in ``t``)."""
        edges = np.append(self.times, max(self.horizon, np.max(t, initial=0.0)))
        cum = np.concatenate([[0.0], np.cumsum(np.asarray(lambdas)[self.states] * np.diff(edges))])
        return np.interp(t, edges, cum)


def simulate_regime_path(regime: RegimeSpec, horizon: float, seed) -> RegimePath:
    if not horizon > 0:
        raise DomainError("horizon must be > 0")
    A = regime.A
    rates = -np.diag(A).copy()
    jump = A - np.diag(np.diag(A))
    with np.errstate(invalid="ignore", divide="ignore"):
        jump = np.where(rates[:, None] > 0, jump / rates[:, None], 0.0)
    cum_jump = np.cumsum(jump, axis=1)
    gen = as_generator(seed)
    expected = int(2 * (rates.max() * horizon + 8))
    times, states, _, _ = with_uniforms(
        gen, expected,
        lambda u: _loops.ctmc_path(np.cumsum(regime.pstar), rates, cum_jump, float(horizon), u),
    )
    return RegimePath(times.copy(), states.copy(), float(horizon))
