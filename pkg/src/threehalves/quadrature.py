"""Quadrature of the pathwise time integral of 1/U over one outer step."""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError, NonPositiveSample, OddSubintervals

__all__ = ["QuadratureRule", "QUADRATURE_KINDS", "integrate_inverse"]

QUADRATURE_KINDS = ("trapezoid", "simpson13")
TRAPEZOID = 0
SIMPSON13 = 1


@dataclass(frozen=True)
class QuadratureRule:
    """Composite rule applied to ``M`` equal subintervals of one outer step."""

    kind: str = "simpson13"
    M: int = 2

    def __post_init__(self):
        if self.kind not in QUADRATURE_KINDS:
            raise DomainError(f"quadrature kind must be one of {QUADRATURE_KINDS}, got {self.kind!r}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M!r}")
        if self.kind == "simpson13" and self.M % 2:
            raise OddSubintervals(f"simpson13 needs an even number of subintervals, got M={self.M}")

    @property
    def code(self) -> int:
        return TRAPEZOID if self.kind == "trapezoid" else SIMPSON13


@numba.njit(cache=True, inline="always")
def _integrate_inverse(u, h, code):
    # u holds M+1 positive samples at spacing h/M.
    m = u.shape[0] - 1
    dx = h / m
    if code == TRAPEZOID:
        acc = 0.5 * (1.0 / u[0] + 1.0 / u[m])
        for i in range(1, m):
            acc += 1.0 / u[i]
        return acc * dx
    acc = 1.0 / u[0] + 1.0 / u[m]
    for i in range(1, m):
        acc += (4.0 if i % 2 else 2.0) / u[i]
    return acc * dx / 3.0


def integrate_inverse(u_values, h: float, rule: QuadratureRule = QuadratureRule("trapezoid", 1)) -> float:
    """Estimate the integral of 1/U over a step of width ``h``.

    Args:
        u_values: M+1 samples of U at equally spaced times covering the step.
        h: width of the outer step.
        rule: composite quadrature rule; its ``M`` must match the sample count.

    Raises:
        NonPositiveSample: if any sample is <= 0.
        OddSubintervals: for Simpson's rule with an odd number of subintervals.
    """
    u = np.ascontiguousarray(u_values, dtype=np.float64)
    if u.ndim != 1 or u.shape[0] != rule.M + 1:
        raise DomainError(f"expected {rule.M + 1} samples for M={rule.M}, got shape {u.shape}")
    if rule.kind == "simpson13" and rule.M % 2:
        raise OddSubintervals(f"simpson13 needs an even number of subintervals, got M={rule.M}")
    if not np.all(u > 0.0):
        raise NonPositiveSample(f"all samples of U must be > 0, got min {u.min()!r}")
    if not h >= 0.0:
        raise DomainError(f"h must be >= 0, got {h!r}")
    return float(_integrate_inverse(u, float(h), rule.code))
