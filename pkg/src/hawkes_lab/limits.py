"""Closed-form LLN drifts and FCLT volatilities.

The diffusion limit of every model variant factorises as

    (S_nt - N(nt) a*) / sqrt(n)  ->  sigma* sqrt(rho) W(t)

with ``sigma*^2`` the long-run variance of the mark chain and ``rho`` the
long-run event rate of the counting process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .chains import MarkChainSpec, two_state_chain
from .errors import (
    DivergentIntegralError,
    ErgodicityError,
    FCLTPreconditionError,
    NonStationaryError,
    NumericalError,
    ValidationError,
)
from .hawkes import HawkesSpec
from .kernels import first_moment
from .price import PriceModelSpec

MAX_CONDITION = 1e12
POISSON_RESIDUAL_TOL = 1e-9


def chpdo_coefficients(p: float, p_prime: float, delta: float) -> tuple[float, float]:
    """Drift ``s*`` and variance ``sigma^2`` for +-delta marks (explicit two-state form)."""
    if p + p_prime == 2.0:
        raise ErgodicityError("p + p' = 2: both states absorbing")
    two_state_chain(p, p_prime, delta)  # validates ergodicity
    pi = (1.0 - p_prime) / (2.0 - p - p_prime)
    s_star = delta * (2.0 * pi - 1.0)
    sigma_sq = 4.0 * delta**2 * (
        (1.0 - p_prime + pi * (p_prime - p)) / (p + p_prime - 2.0) ** 2 - pi * (1.0 - pi)
    )
    return s_star, max(sigma_sq, 0.0)


def gchp2sdo_coefficients(chain: MarkChainSpec) -> tuple[float, float]:
    """``(a*, sigma*^2)`` for a general two-state chain, explicit formula.

    Kept as an independent route to cross-check :func:`nstate_coefficients`.
    """
    if chain.n != 2:
        raise ValidationError("explicit two-state formula needs exactly 2 states")
    p, pp = chain.P[0, 0], chain.P[1, 1]
    p1, p2 = chain.pi
    a1, a2 = chain.a
    m = p1 * a1 + p2 * a2
    d = p + pp - 2.0
    sig = (
        p1 * a1**2 + p2 * a2**2
        + m * (-2 * a1 * p1 - 2 * a2 * p2 + m * (p1 + p2))
        + (p1 * (1 - p) + p2 * (1 - pp)) * (a1 - a2) ** 2 / d**2
        + 2 * (a2 - a1) * ((p2 * a2 * (1 - pp) - p1 * a1 * (1 - p)) / d
                           + m * (p1 - p * p1 - p2 + pp * p2) / d)
    )
    return m, sig


@dataclass(frozen=True, eq=False)
class PoissonEqSolution:
    b: np.ndarray
    g: np.ndarray
    v: np.ndarray
    residual: float


def nstate_coefficients(chain: MarkChainSpec) -> tuple[float, float, PoissonEqSolution]:
    """Mean mark ``a*`` and long-run variance ``sigma*^2`` of an n-state chain.

    Solves ``(P + Pi* - I) g = b`` with ``b = a - a*`` and averages the
    per-state contributions

        v(i) = b(i)^2 + sum_j (g(j)-g(i))^2 P(i,j) - 2 b(i) sum_j (g(j)-g(i)) P(i,j)

    under ``pi*``.
    """
    P, a, pi = chain.P, chain.a, chain.pi
    n = chain.n
    a_star = float(pi @ a)
    b = a - a_star
    M = P + np.tile(pi, (n, 1)) - np.eye(n)
    if np.linalg.cond(M) > MAX_CONDITION:
        raise NumericalError("P + Pi* - I is singular or ill-conditioned")
    g = np.linalg.solve(M, b)
    residual = float(np.max(np.abs(M @ g - b)))
    if residual > POISSON_RESIDUAL_TOL * max(1.0, float(np.abs(b).max())):
        raise NumericalError(f"Poisson equation residual {residual:.3g} too large")
    diff = g[None, :] - g[:, None]  # diff[i, j] = g(j) - g(i)
    v = b**2 + np.sum(diff**2 * P, axis=1) - 2 * b * np.sum(diff * P, axis=1)
    sigma_sq = float(pi @ v)
    return a_star, max(sigma_sq, 0.0), PoissonEqSolution(b, g, v, residual)


def two_state_v(chain: MarkChainSpec) -> np.ndarray:
    """``v(1), v(2)`` written out for two states; same ``g`` as the general solver."""
    if chain.n != 2:
        raise ValidationError("two_state_v needs exactly 2 states")
    _, _, sol = nstate_coefficients(chain)
    b, g, P = sol.b, sol.g, chain.P
    v1 = b[0] ** 2 + P[0, 1] * (g[1] - g[0]) ** 2 - 2 * b[0] * P[0, 1] * (g[1] - g[0])
    v2 = b[1] ** 2 + P[1, 0] * (g[0] - g[1]) ** 2 - 2 * b[1] * P[1, 0] * (g[0] - g[1])
    return np.array([v1, v2])


def regime_rate(pstar, lambdas) -> float:
    """Stationary mean background ``sum_i p_i* lambda_i``."""
    pstar = np.asarray(pstar, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    if pstar.shape != lambdas.shape or abs(pstar.sum() - 1.0) > 1e-12 or np.any(pstar < 0):
        raise ValidationError("pstar must be a probability vector matching lambdas")
    if np.any(lambdas <= 0):
        raise ValidationError("regime intensities must be > 0")
    return float(pstar @ lambdas)


@dataclass(frozen=True)
class EventRate:
    value: float
    se: float = 0.0
    provenance: str = "closed_form"


def check_fclt_preconditions(hawkes: HawkesSpec) -> float:
    """Return ``mu_hat`` or raise if the stationary/FCLT conditions fail."""
    try:
        mu_hat = hawkes.mu_hat()
    except DivergentIntegralError as exc:
        raise NonStationaryError(str(exc)) from exc
    if hawkes.is_linear and mu_hat >= 1.0:
        raise NonStationaryError(f"branching ratio {mu_hat:.6g} >= 1")
    if not hawkes.is_linear and hawkes.stability_margin() >= 1.0:
        raise NonStationaryError(
            f"lip(h) * mu_hat = {hawkes.stability_margin():.6g} >= 1; no stable stationary version"
        )
    if not math.isfinite(first_moment(hawkes.kernel)):
        raise FCLTPreconditionError("kernel first moment is infinite")
    return mu_hat


def event_rate(hawkes: HawkesSpec, mc_budget: Optional[dict] = None, force_mc: bool = False) -> EventRate:
    """Long-run events per unit time.

    Linear specs use ``lambda / (1 - mu_hat)`` (``lambda`` replaced by the
    stationary mean background under regime switching). Nonlinear specs, or
    ``force_mc=True``, fall back to a Monte Carlo estimate of ``E[N[0,1]]``;
    ``mc_budget`` is forwarded to :func:`hawkes_lab.mc.estimate_mean_rate`.
    """
    mu_hat = check_fclt_preconditions(hawkes)
    if hawkes.is_linear and not force_mc:
        if hawkes.regime is None:
            return EventRate(hawkes.background / (1.0 - mu_hat))
        lam = regime_rate(hawkes.regime.pstar, hawkes.regime.lambdas)
        return EventRate(lam / (1.0 - mu_hat))
    from .mc import estimate_mean_rate

    rate, se = estimate_mean_rate(hawkes, **(mc_budget or {}))
    return EventRate(rate, se, "estimated")


@dataclass(frozen=True)
class DiffusionLimit:
    a_star: float
    sigma_star_sq: float
    event_rate: float
    rate_se: float = 0.0
    rate_provenance: str = "closed_form"
    lln_drift_rate: float = field(init=False)
    fclt_vol: float = field(init=False)
    fclt_vol_se: float = field(init=False)

    def __post_init__(self):
        vol = math.sqrt(self.sigma_star_sq * self.event_rate)
        object.__setattr__(self, "lln_drift_rate", self.a_star * self.event_rate)
        object.__setattr__(self, "fclt_vol", vol)
        # delta method on sqrt(sigma^2 * rho)
        se = self.sigma_star_sq * self.rate_se / (2 * vol) if vol > 0 else 0.0
        object.__setattr__(self, "fclt_vol_se", se)

    def to_dict(self):
        return {
            "a_star": self.a_star,
            "sigma_star_sq": self.sigma_star_sq,
            "event_rate": self.event_rate,
            "rate_se": self.rate_se,
            "rate_provenance": self.rate_provenance,
            "lln_drift_rate": self.lln_drift_rate,
            "fclt_vol": self.fclt_vol,
            "fclt_vol_se": self.fclt_vol_se,
        }


def diffusion_limit(model: PriceModelSpec, mc_budget: Optional[dict] = None, force_mc: bool = False) -> DiffusionLimit:
    a_star, sigma_sq, _ = nstate_coefficients(model.marks)
    rate = event_rate(model.hawkes, mc_budget, force_mc)
    return DiffusionLimit(a_star, sigma_sq, rate.value, rate.se, rate.provenance)


def lln_drift(model: PriceModelSpec, t: float, mc_budget: Optional[dict] = None) -> float:
    """Limit of ``S_nt / n``: ``a* * rho * t``."""
    return diffusion_limit(model, mc_budget).lln_drift_rate * t
