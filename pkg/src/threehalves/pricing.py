"""Payoffs, the self-normalised importance-sampling price estimator and error statistics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, EmptyPathSet, NumericalFailure
from .paths import PathBatch, PathRecord

__all__ = [
    "PayoffSpec",
    "PriceEstimate",
    "ErrorStats",
    "EXACT_PRICES",
    "exact_price",
    "payoff_european_call",
    "estimate_price",
    "error_stats",
]

# Reference prices keyed by (parameter set, K/S0, maturity).  See the README
# for the maturity caveat on the T=1 entries.
EXACT_PRICES: dict[tuple[str, float, float], float] = {
    ("PS1", 1.0, 1.0): 0.4431,
    ("PS2", 1.0, 0.5): 7.3864,
    ("PS3", 1.0, 0.5): 7.0422,
    ("PS2", 0.95, 1.0): 10.364,
    ("PS2", 1.0, 1.0): 7.386,
    ("PS2", 1.05, 1.0): 4.938,
    ("PS3", 0.95, 1.0): 10.055,
    ("PS3", 1.0, 1.0): 7.042,
    ("PS3", 1.05, 1.0): 4.586,
    ("PS4", 0.95, 1.0): 11.657,
    ("PS4", 1.0, 1.0): 8.926,
    ("PS4", 1.05, 1.0): 6.636,
    ("PS5", 0.95, 1.0): 11.724,
    ("PS5", 1.0, 1.0): 8.999,
    ("PS5", 1.05, 1.0): 6.710,
}


def exact_price(parameter_set: str, moneyness: float, T: float) -> float | None:
    for (name, k, t), value in EXACT_PRICES.items():
        if name == parameter_set and math.isclose(k, moneyness) and math.isclose(t, T):
            return value
    return None


@dataclass(frozen=True)
class PayoffSpec:
    """Discounted payoff.

    For ``kind="european_call"`` the payoff is ``exp(-r T) max(S_T - K, 0)``.
    ``path_functional`` overrides it: a callable taking the :class:`PathBatch`
    (with trajectories when the payoff is path dependent) and returning one
    discounted payoff per path.
    """

    strike: float
    r: float = 0.0
    kind: str = "european_call"
    path_functional: Callable[[PathBatch], np.ndarray] | None = None

    def __post_init__(self):
        if not self.strike > 0.0:
            raise DomainError(f"strike must be > 0, got {self.strike!r}")
        if self.kind != "european_call":
            raise DomainError(f"unsupported payoff kind {self.kind!r}")

    def evaluate(self, paths: PathBatch) -> np.ndarray:
        if self.path_functional is not None:
            return np.asarray(self.path_functional(paths), dtype=float)
        return payoff_european_call(paths.s, self.strike, self.r, paths.T)


@dataclass(frozen=True)
class PriceEstimate:
    price: float
    std_error: float
    weight_sum: float
    ess: float
    n_stopped: int
    n_paths: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ErrorStats:
    """Error of repeated estimates against a reference price.

    ``mean_price`` and ``mean_std_error`` describe the average of the repeated
    estimates, whose standard error combines the per-run delta-method errors.
    """

    exact_price: float
    mse: float
    rel_mse: float
    n_repetitions: int
    mean_price: float
    mean_std_error: float

    @property
    def rel_mse_pct(self) -> float:
        return 100.0 * self.rel_mse

    def to_dict(self) -> dict:
        return asdict(self)


def payoff_european_call(s_terminal, K: float, r: float, T: float):
    """``exp(-r T) * max(s_terminal - K, 0)``; scalar in, scalar out."""
    if not K > 0.0:
        raise DomainError(f"K must be > 0, got {K!r}")
    out = math.exp(-r * T) * np.maximum(np.asarray(s_terminal, dtype=float) - K, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def estimate_price(
    paths: PathBatch | Sequence[PathRecord],
    payoff: PayoffSpec,
    *,
    normalized: bool = True,
    T: float | None = None,
) -> PriceEstimate:
    """Importance-sampling price from weighted paths.

    The estimate is ``sum(phi_j L_j 1{tau_j > T}) / sum(L_j)``: stopped paths
    add their weight to the denominator only.  With ``normalized=False`` the
    denominator is the path count instead.  Sums are correctly rounded
    (``math.fsum``) so the result does not depend on how paths were
    partitioned.  A list of :class:`PathRecord` needs ``T``.
    """
    if not isinstance(paths, PathBatch):
        records = list(paths)
        if not records:
            raise EmptyPathSet("no paths to estimate from")
        if T is None:
            raise DomainError("T is required when estimating from PathRecord lists")
        paths = PathBatch.from_records(records, T=T, h=T)
    n = len(paths)
    if n == 0:
        raise EmptyPathSet("no paths to estimate from")
    w = np.asarray(paths.l, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise NumericalFailure("likelihood weights must be finite and > 0")
    phi = payoff.evaluate(paths)
    alive = np.asarray(paths.survived, dtype=bool)
    contrib = np.where(alive, phi * w, 0.0)
    if not np.all(np.isfinite(contrib)):
        raise NumericalFailure(f"{int(np.count_nonzero(~np.isfinite(contrib)))} path(s) gave non-finite payoffs")
    num = math.fsum(contrib)
    w_sum = math.fsum(w)
    if normalized:
        price = num / w_sum
        resid = contrib - price * w
        var = math.fsum(resid * resid) / (w_sum * w_sum) * (n / (n - 1)) if n > 1 else 0.0
    else:
        price = num / n
        resid = contrib - price
        var = math.fsum(resid * resid) / (n * (n - 1)) if n > 1 else 0.0
    return PriceEstimate(
        price=price,
        std_error=math.sqrt(var),
        weight_sum=w_sum,
        ess=w_sum * w_sum / math.fsum(w * w),
        n_stopped=int(np.count_nonzero(~alive)),
        n_paths=n,
    )


def error_stats(estimates: Sequence[PriceEstimate], exact: float) -> ErrorStats:
    """Mean square error of repeated estimates against ``exact``."""
    if not exact > 0.0:
        raise DomainError(f"exact price must be > 0, got {exact!r}")
    if len(estimates) < 2:
        raise DomainError(f"need at least 2 estimates, got {len(estimates)}")
    prices = [e.price for e in estimates]
    k = len(prices)
    mse = math.fsum((exact - p) ** 2 for p in prices) / k
    return ErrorStats(
        exact_price=exact,
        mse=mse,
        rel_mse=mse / exact,
        n_repetitions=k,
        mean_price=math.fsum(prices) / k,
        mean_std_error=math.sqrt(math.fsum(e.std_error**2 for e in estimates)) / k,
    )
