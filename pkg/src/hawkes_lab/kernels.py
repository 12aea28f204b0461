"""Excitation kernels and their integrals.

Three families are supported: exponential ``alpha * exp(-beta * t)``,
power law ``k / (c + t) ** p`` and the zero kernel (compound Poisson).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DivergentIntegralError, DomainError, ValidationError

# Numeric codes shared with the compiled simulation loops.
KIND_ZERO = 0
KIND_EXPONENTIAL = 1
KIND_POWER_LAW = 2


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}", paths=[name])


@dataclass(frozen=True)
class Exponential:
    alpha: float
    beta: float

    def __post_init__(self):
        _check_finite("kernel.alpha", self.alpha)
        _check_finite("kernel.beta", self.beta)
        if self.alpha < 0:
            raise ValidationError("kernel.alpha must be >= 0", paths=["kernel.alpha"])
        if self.beta <= 0:
            raise ValidationError("kernel.beta must be > 0", paths=["kernel.beta"])

    kind = KIND_EXPONENTIAL

    @property
    def params(self):
        return np.array([self.alpha, self.beta, 0.0])

    def __call__(self, dt):
        return self.alpha * np.exp(-self.beta * np.asarray(dt, dtype=float))

    def integral(self, u):
        """Integral of the kernel over ``[0, u]``."""
        return self.alpha / self.beta * -np.expm1(-self.beta * np.asarray(u, dtype=float))

    def to_dict(self):
        return {"type": "exponential", "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class PowerLaw:
    k: float
    c: float
    p: float

    def __post_init__(self):
        for name in ("k", "c", "p"):
            _check_finite(f"kernel.{name}", getattr(self, name))
        if self.k < 0:
            raise ValidationError("kernel.k must be >= 0", paths=["kernel.k"])
        if self.c <= 0:
            raise ValidationError("kernel.c must be > 0", paths=["kernel.c"])
        if self.p <= 0:
            raise ValidationError("kernel.p must be > 0", paths=["kernel.p"])

    kind = KIND_POWER_LAW

    @property
    def params(self):
        return np.array([self.k, self.c, self.p])

    def __call__(self, dt):
        return self.k / (self.c + np.asarray(dt, dtype=float)) ** self.p

    def integral(self, u):
        u = np.asarray(u, dtype=float)
        if self.p == 1.0:
            return self.k * np.log1p(u / self.c)
        q = 1.0 - self.p
        # k/(1-p) * ((c+u)^(1-p) - c^(1-p)), written to avoid cancellation
        return self.k * self.c**q * np.expm1(q * np.log1p(u / self.c)) / q

    def to_dict(self):
        return {"type": "power_law", "k": self.k, "c": self.c, "p": self.p}


@dataclass(frozen=True)
class Zero:
    kind = KIND_ZERO

    @property
    def params(self):
        return np.zeros(3)

    def __call__(self, dt):
        return np.zeros_like(np.asarray(dt, dtype=float))

    def integral(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def to_dict(self):
        return {"type": "zero"}


Kernel = Union[Exponential, PowerLaw, Zero]


def eval_kernel(kernel: Kernel, dt):
    """Kernel value at elapsed time ``dt >= 0``.

    Works elementwise on arrays; scalars come back as Python floats.
    """
    arr = np.asarray(dt, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("kernel evaluated at negative elapsed time")
    out = kernel(arr)
    return float(out) if out.ndim == 0 else out


def branching_ratio(kernel: Kernel) -> float:
    """Total mass of the kernel on ``[0, inf)``."""
    if isinstance(kernel, Exponential):
        return kernel.alpha / kernel.beta
    if isinstance(kernel, PowerLaw):
        if kernel.p <= 1:
            raise DivergentIntegralError(
                f"power-law kernel with p={kernel.p} <= 1 has infinite mass"
            )
        return kernel.k * kernel.c ** (1 - kernel.p) / (kernel.p - 1)
    return 0.0


def first_moment(kernel: Kernel) -> float:
    """``int_0^inf s * mu(s) ds``; ``inf`` when it diverges."""
    if isinstance(kernel, Exponential):
        return kernel.alpha / kernel.beta**2
    if isinstance(kernel, PowerLaw):
        if kernel.k == 0:
            return 0.0
        if kernel.p <= 2:
            return math.inf
        p, c = kernel.p, kernel.c
        return kernel.k * c ** (2 - p) / ((p - 1) * (p - 2))
    return 0.0


@dataclass(frozen=True)
class StationarityDiagnostics:
    mu_hat: float
    first_moment_finite: bool
    stationary: bool


def validate_stationarity(kernel: Kernel) -> StationarityDiagnostics:
    try:
        mu_hat = branching_ratio(kernel)
    except DivergentIntegralError:
        mu_hat = math.inf
    return StationarityDiagnostics(
        mu_hat=mu_hat,
        first_moment_finite=math.isfinite(first_moment(kernel)),
        stationary=0.0 <= mu_hat < 1.0,
    )


def kernel_from_dict(d: dict) -> Kernel:
    kind = d.get("type")
    if kind == "exponential":
        return Exponential(float(d["alpha"]), float(d["beta"]))
    if kind == "power_law":
        return PowerLaw(float(d["k"]), float(d["c"]), float(d["p"]))
    if kind == "zero":
        return Zero()
    raise ValidationError(f"unknown kernel type {kind!r}", paths=["kernel.type"])
