"""3/2 model parameters and the inverse-variance (CIR) reparametrisation.

Under the 3/2 model the variance follows

    dV = kappa V (theta - V) dt + epsilon V^{3/2} dW1,

and its inverse U = 1/V is a square-root process

    dU = kappa_t (theta_t - U) dt + eps_t sqrt(U) dW1,

with kappa_t = kappa*theta, theta_t = (kappa + epsilon**2)/(kappa*theta) and
eps_t = -epsilon.  U is simulated as a sum of ``n`` squared Ornstein-Uhlenbeck
components, which is exact when its long-run mean is theta_n = n*eps_t**2/(4*kappa_t);
any mismatch between theta_n and theta_t is corrected by a likelihood weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

from .errors import DomainError, FellerViolation

__all__ = [
    "ModelParams",
    "TransformedParams",
    "RecursionConstants",
    "PARAMETER_SETS",
    "L_COEFFICIENTS",
    "validate",
    "transform",
    "ou_count",
    "recursion_constants",
]

# Likelihood coefficient variants for the int(1/U) term of the weight recursion.
#   "derived": (eps_t**2 - kappa_t*theta_n - kappa_t*theta_t) / 2
#   "printed": (kappa_t*theta_t - 3*kappa_t*theta_n + eps_t**2) / 2
L_COEFFICIENTS = ("derived", "printed")


@dataclass(frozen=True)
class ModelParams:
    """Raw 3/2 model parameters as quoted or calibrated.

    Attributes:
        s0: initial stock price.
        v0: initial spot variance.
        kappa: mean-reversion scale (1/time).
        theta: variance mean level.
        epsilon: vol-of-vol.
        rho: correlation between the stock and variance drivers.
        r: risk-free rate (1/time).
    """

    s0: float
    v0: float
    kappa: float
    theta: float
    epsilon: float
    rho: float
    r: float

    def to_dict(self) -> dict[str, float]:
        return {
            "s0": self.s0,
            "v0": self.v0,
            "kappa": self.kappa,
            "theta": self.theta,
            "epsilon": self.epsilon,
            "rho": self.rho,
            "r": self.r,
        }


# Table of the five parameter sets used throughout the experiments.
PARAMETER_SETS: dict[str, ModelParams] = {
    "PS1": ModelParams(s0=1.0, v0=1.0, kappa=2.0, theta=1.5, epsilon=0.2, rho=-0.5, r=0.05),
    "PS2": ModelParams(s0=100.0, v0=0.06, kappa=22.84, theta=0.218, epsilon=8.56, rho=-0.99, r=0.00),
    "PS3": ModelParams(s0=100.0, v0=0.06, kappa=18.32, theta=0.218, epsilon=8.56, rho=-0.99, r=0.00),
    "PS4": ModelParams(s0=100.0, v0=0.06, kappa=19.76, theta=0.218, epsilon=3.20, rho=-0.99, r=0.00),
    "PS5": ModelParams(s0=100.0, v0=0.06, kappa=20.48, theta=0.218, epsilon=3.20, rho=-0.99, r=0.00),
}


def validate(params: ModelParams) -> ModelParams:
    """Check the model invariants and return ``params`` unchanged.

    Raises:
        FellerViolation: if kappa <= -epsilon**2/2.
        DomainError: for non-positive s0, v0 or epsilon, |rho| > 1, non-finite
            inputs, or kappa*theta <= 0 (the inverse variance would not mean-revert).
    """
    values = params.to_dict()
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")
    for name in ("s0", "v0", "epsilon"):
        if values[name] <= 0.0:
            raise DomainError(f"{name} must be > 0, got {values[name]!r}")
    if not -1.0 <= params.rho <= 1.0:
        raise DomainError(f"rho must lie in [-1, 1], got {params.rho!r}")
    if params.kappa <= -0.5 * params.epsilon**2:
        raise FellerViolation(
            f"kappa={params.kappa!r} must exceed -epsilon^2/2={-0.5 * params.epsilon**2!r}"
        )
    if params.kappa * params.theta <= 0.0:
        raise DomainError(
            f"kappa*theta must be > 0 for a mean-reverting inverse variance, got "
            f"{params.kappa * params.theta!r}"
        )
    return params


def ou_count(ratio: float) -> int:
    """Number of OU components: ``max(floor(ratio + 1/2), 1)``.

    Accepts either the dimension ratio ``4 kappa_t theta_t / eps_t^2`` or a
    :class:`TransformedParams` (whose ``n`` is returned).
    """
    if isinstance(ratio, TransformedParams):
        return ratio.n
    return max(int(math.floor(ratio + 0.5)), 1)


class RecursionConstants(NamedTuple):
    """Constants of the per-step recursions for a fixed step ``h``."""

    a: float
    b: float
    c: float
    d: float
    alpha_h: float
    sigma2_h: float


@dataclass(frozen=True)
class TransformedParams:
    """Inverse-variance parametrisation and the constants derived from it.

    ``ratio`` is always the raw dimension ``4(kappa + eps^2)/eps^2``.  When it is
    within ``integer_tol`` of the integer ``n`` the set is treated as lying in
    the integer regime: the simulated long-run mean theta_n is used as the
    model's own and every likelihood weight is exactly one (``c == 0``).
    """

    model: ModelParams
    kappa_t: float
    theta_t: float
    eps_t: float
    ratio: float
    n: int
    theta_n: float
    u0: float
    integer_regime: bool
    l_coefficient: str = "derived"

    @property
    def theta_eff(self) -> float:
        """Long-run mean of U under the pricing measure."""
        return self.theta_n if self.integer_regime else self.theta_t

    @property
    def a(self) -> float:
        return self.model.r + self.model.rho * self.kappa_t / self.eps_t

    @property
    def b(self) -> float:
        rho, k, e = self.model.rho, self.kappa_t, self.eps_t
        return (rho / e) * (k * self.theta_eff - 0.5 * e * e) + 0.5

    @property
    def c(self) -> float:
        if self.integer_regime:
            return 0.0
        return -(self.kappa_t * self.theta_n - self.kappa_t * self.theta_t) / self.eps_t**2

    @property
    def d(self) -> float:
        k, e2 = self.kappa_t, self.eps_t**2
        if self.l_coefficient == "printed":
            return 0.5 * (k * self.theta_eff - 3.0 * k * self.theta_n + e2)
        return 0.5 * (e2 - k * self.theta_n - k * self.theta_eff)

    @property
    def feller_margin(self) -> float:
        """kappa_t*theta_t - eps_t^2/2, strictly positive for valid parameters."""
        return self.kappa_t * self.theta_t - 0.5 * self.eps_t**2

    def ou_constants(self, h: float) -> tuple[float, float]:
        """Exact OU transition over ``h``: (mean factor, variance)."""
        k, e2 = self.kappa_t, self.eps_t**2
        alpha_h = math.exp(-0.5 * k * h)
        sigma2_h = (e2 / (4.0 * k)) * -math.expm1(-h * k)
        return alpha_h, sigma2_h

    def with_l_coefficient(self, variant: str) -> TransformedParams:
        if variant not in L_COEFFICIENTS:
            raise DomainError(f"l_coefficient must be one of {L_COEFFICIENTS}, got {variant!r}")
        return replace(self, l_coefficient=variant)


def transform(
    params: ModelParams,
    *,
    integer_tol: float = 1e-3,
    l_coefficient: str = "derived",
) -> TransformedParams:
    """Derive the inverse-variance CIR parametrisation of ``params``.

    Args:
        params: raw model parameters (validated here).
        integer_tol: absolute distance of ``ratio`` from ``n`` under which the
            set is treated as integer-dimensional.  Table values such as
            kappa=18.32 are rounded and give ratio=5.0000873; pass 0 to only
            snap exact integers.
        l_coefficient: ``"derived"`` or ``"printed"``; see ``L_COEFFICIENTS``.
    """
    validate(params)
    if l_coefficient not in L_COEFFICIENTS:
        raise DomainError(f"l_coefficient must be one of {L_COEFFICIENTS}, got {l_coefficient!r}")
    eps2 = params.epsilon**2
    kappa_t = params.kappa * params.theta
    theta_t = (params.kappa + eps2) / kappa_t
    eps_t = -params.epsilon
    ratio = 4.0 * (params.kappa + eps2) / eps2
    n = ou_count(ratio)
    theta_n = n * eps2 / (4.0 * kappa_t)
    # ulp-level misses of an integer (PS1, PS5) always count as integer.
    integer_regime = abs(ratio - n) <= max(integer_tol, 64 * math.ulp(float(n)))
    return TransformedParams(
        model=params,
        kappa_t=kappa_t,
        theta_t=theta_t,
        eps_t=eps_t,
        ratio=ratio,
        n=n,
        theta_n=theta_n,
        u0=1.0 / params.v0,
        integer_regime=integer_regime,
        l_coefficient=l_coefficient,
    )


def recursion_constants(transformed: TransformedParams, h: float) -> RecursionConstants:
    """Constants a, b, c, d, alpha_h, sigma2_h of the step recursions."""
    if not h > 0.0:
        raise DomainError(f"h must be > 0, got {h!r}")
    alpha_h, sigma2_h = transformed.ou_constants(h)
    return RecursionConstants(
        a=transformed.a,
        b=transformed.b,
        c=transformed.c,
        d=transformed.d,
        alpha_h=alpha_h,
        sigma2_h=sigma2_h,
    )
