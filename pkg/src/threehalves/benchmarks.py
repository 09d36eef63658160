"""Comparison schemes for the 3/2 model: Milstein and quadratic-exponential (QE).

Both discretise the inverse variance U directly under the pricing measure, so
every path has unit weight and is never stopped.

Draw layout per path and step ``i``: counter ``2i`` drives U (a normal for
Milstein, a uniform for QE) and ``2i + 1`` is the stock's orthogonal normal.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import ndtri

from .errors import DomainError, NonPositiveU
from .explicit import _chunks, _s_step, grid_steps, s_step
from .params import TransformedParams
from .paths import PathBatch
from .rng import _ndtri, normal_at, split_seed, uniform_at

__all__ = [
    "QeConfig",
    "milstein_u_step",
    "milstein_s_step",
    "qe_moments",
    "qe_sample",
    "qe_u_step",
    "qe_s_step",
    "simulate_milstein",
    "simulate_qe",
]


@dataclass(frozen=True)
class QeConfig:
    """Switching constant of the QE scheme and the floor applied to its output."""

    phi_c: float = 1.5
    u_floor: float = 1e-5

    def __post_init__(self):
        if not 1.0 <= self.phi_c <= 2.0:
            raise DomainError(f"phi_c must lie in [1, 2], got {self.phi_c!r}")
        if not self.u_floor > 0.0:
            raise DomainError(f"u_floor must be > 0, got {self.u_floor!r}")


# -- Milstein ---------------------------------------------------------------


@numba.njit(cache=True, inline="always")
def _milstein_u(u_t, h, kappa_t, theta, eps_t, z1):
    ub = max(u_t, 0.0)
    return u_t + kappa_t * (theta - ub) * h + eps_t * math.sqrt(ub * h) * z1 + 0.25 * eps_t * eps_t * (z1 * z1 - 1.0) * h


@numba.njit(cache=True, inline="always")
def _milstein_s(s_t, ub, h, r, z2):
    if ub <= 0.0:
        return np.nan
    return s_t * math.exp((r - 0.5 / ub) * h + math.sqrt(h / ub) * z2)


def milstein_u_step(u_t: float, h: float, tp: TransformedParams, z1: float) -> float:
    """Milstein step of U; negative inputs are clipped at zero inside the step."""
    return float(_milstein_u(u_t, h, tp.kappa_t, tp.theta_eff, tp.eps_t, z1))


def milstein_s_step(s_t, u_bar, h, r, rho, z1, z_perp, *, correlated: bool = True) -> float:
    """Log-Euler stock step with variance ``1/u_bar``.

    With ``correlated`` the stock shock is ``rho*z1 + sqrt(1-rho^2)*z_perp``;
    otherwise ``z_perp`` alone is used.
    """
    if not u_bar > 0.0:
        raise NonPositiveU(f"u_bar must be > 0, got {u_bar!r}")
    z2 = rho * z1 + math.sqrt(1.0 - rho * rho) * z_perp if correlated else z_perp
    return float(_milstein_s(s_t, u_bar, h, r, z2))


# -- Quadratic-exponential ---------------------------------------------------


@numba.njit(cache=True, inline="always")
def _qe_moments(u_t, ekh, theta, eps_t, kappa_t):
    e2 = eps_t * eps_t
    m = theta + (u_t - theta) * ekh
    s2 = u_t * e2 * ekh / kappa_t * (1.0 - ekh) + theta * e2 / (2.0 * kappa_t) * (1.0 - ekh) ** 2
    return m, s2


@numba.njit(inline="always")
def _qe_sample(m, s2, x, phi_c, u_floor):
    phi = s2 / (m * m)
    if phi < phi_c:
        inv = 2.0 / phi
        b2 = inv - 1.0 + math.sqrt(inv) * math.sqrt(inv - 1.0)
        a = m / (1.0 + b2)
        v = math.sqrt(b2) + _ndtri(x)
        u = a * v * v
    else:
        p = (phi - 1.0) / (phi + 1.0)
        beta = (1.0 - p) / m
        u = 0.0 if x <= p else math.log((1.0 - p) / (1.0 - x)) / beta
    return max(u, u_floor)


def qe_moments(u_t: float, h: float, tp: TransformedParams) -> tuple[float, float]:
    """Conditional mean and variance of U after ``h`` given ``u_t``."""
    return _qe_moments(u_t, math.exp(-tp.kappa_t * h), tp.theta_eff, tp.eps_t, tp.kappa_t)


def qe_sample(m: float, s2: float, x: float, qe: QeConfig = QeConfig()) -> float:
    """Moment-matched draw from (m, s2) using one uniform ``x``.

    The quadratic branch uses ``Z = Phi^{-1}(x)``; the exponential branch
    inverts its CDF at ``x`` (mass ``p`` at zero).  The result is floored at
    ``qe.u_floor``.
    """
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x!r}")
    phi = s2 / (m * m)
    if phi < qe.phi_c:
        inv = 2.0 / phi
        b2 = inv - 1.0 + math.sqrt(inv) * math.sqrt(inv - 1.0)
        u = m / (1.0 + b2) * (math.sqrt(b2) + float(ndtri(x))) ** 2
    else:
        p = (phi - 1.0) / (phi + 1.0)
        beta = (1.0 - p) / m
        u = 0.0 if x <= p else math.log((1.0 - p) / (1.0 - x)) / beta
    return max(u, qe.u_floor)


def qe_u_step(u_t: float, h: float, tp: TransformedParams, qe: QeConfig, x: float) -> float:
    if not u_t > 0.0:
        raise DomainError(f"u_t must be > 0, got {u_t!r}")
    m, s2 = qe_moments(u_t, h, tp)
    return qe_sample(m, s2, x, qe)


def qe_s_step(s_t, u_t, u_next, h, tp: TransformedParams, z) -> float:
    """Stock step of the explicit scheme with a two-point trapezoid for int(1/U)."""
    if not (u_t > 0.0 and u_next > 0.0):
        raise NonPositiveU(f"U must be > 0, got u_t={u_t!r}, u_next={u_next!r}")
    return s_step(s_t, u_t, u_next, 0.5 * h * (1.0 / u_t + 1.0 / u_next), z, tp, h)


# -- Path kernels ------------------------------------------------------------


@numba.njit(nogil=True)
def _milstein_kernel(
    k0, k1, first, count, steps, u0, s0, h, kappa_t, theta, eps_t, r, rho, correlated,
    s_out, u_out, int_out, s_path, u_path, keep,
):
    sq = math.sqrt(1.0 - rho * rho)
    for j in range(count):
        path = first + j
        u = u0
        s = s0
        acc = 0.0
        if keep:
            s_path[j, 0] = s
            u_path[j, 0] = u
        for i in range(steps):
            z1 = normal_at(k0, k1, path, 2 * i)
            zp = normal_at(k0, k1, path, 2 * i + 1)
            ub = max(u, 0.0)
            z2 = rho * z1 + sq * zp if correlated else zp
            s = _milstein_s(s, ub, h, r, z2)
            acc += h / ub if ub > 0.0 else np.inf
            u = _milstein_u(u, h, kappa_t, theta, eps_t, z1)
            if keep:
                s_path[j, i + 1] = s
                u_path[j, i + 1] = u
        s_out[j] = s
        u_out[j] = u
        int_out[j] = acc


@numba.njit(nogil=True)
def _qe_kernel(
    k0, k1, first, count, steps, u0, s0, h, kappa_t, theta, eps_t, rho, a, b, phi_c, u_floor,
    s_out, u_out, int_out, s_path, u_path, keep,
):
    ekh = math.exp(-kappa_t * h)
    rho_over_eps = rho / eps_t
    sq = math.sqrt(1.0 - rho * rho)
    for j in range(count):
        path = first + j
        u = u0
        s = s0
        acc = 0.0
        if keep:
            s_path[j, 0] = s
            u_path[j, 0] = u
        for i in range(steps):
            m, s2 = _qe_moments(u, ekh, theta, eps_t, kappa_t)
            un = _qe_sample(m, s2, uniform_at(k0, k1, path, 2 * i), phi_c, u_floor)
            it = 0.5 * h * (1.0 / u + 1.0 / un)
            s = _s_step(s, u, un, it, normal_at(k0, k1, path, 2 * i + 1), rho_over_eps, a, b, sq, h)
            acc += it
            u = un
            if keep:
                s_path[j, i + 1] = s
                u_path[j, i + 1] = u
        s_out[j] = s
        u_out[j] = u
        int_out[j] = acc


def _run(kernel_args, kernel, T, h, seed, first, count, keep):
    steps = grid_steps(T, h)
    k0, k1 = split_seed(seed)
    s, u, acc = np.empty(count), np.empty(count), np.empty(count)
    shape = (count, steps + 1) if keep else (0, 0)
    sp, up = np.empty(shape), np.empty(shape)
    kernel(k0, k1, np.uint64(first), count, steps, *kernel_args, s, u, acc, sp, up, keep)
    return PathBatch(
        s=s, u=u, l=np.ones(count), tau=np.full(count, T + h), survived=np.ones(count, dtype=bool),
        int_u=acc, T=T, h=h,
        s_path=sp if keep else None, u_path=up if keep else None,
        l_path=np.ones(shape) if keep else None,
    )


def _dispatch(kernel_args, kernel, T, h, N, seed, path_offset, keep_paths, workers):
    parts = _chunks(N, workers)
    if len(parts) == 1:
        return _run(kernel_args, kernel, T, h, seed, path_offset, N, keep_paths)
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        futures = [
            pool.submit(_run, kernel_args, kernel, T, h, seed, path_offset + lo, cnt, keep_paths)
            for lo, cnt in parts
        ]
        return PathBatch.concat([f.result() for f in futures])


def simulate_milstein(
    tp: TransformedParams, T: float, h: float, N: int, seed: int, *,
    correlated: bool = True, path_offset: int = 0, keep_paths: bool = False, workers: int = 1,
) -> PathBatch:
    """Milstein paths; a path whose clipped U reaches zero gets ``s = nan``."""
    m = tp.model
    args = (tp.u0, m.s0, h, tp.kappa_t, tp.theta_eff, tp.eps_t, m.r, m.rho, correlated)
    return _dispatch(args, _milstein_kernel, T, h, N, seed, path_offset, keep_paths, workers)


def simulate_qe(
    tp: TransformedParams, T: float, h: float, N: int, seed: int, qe: QeConfig = QeConfig(), *,
    path_offset: int = 0, keep_paths: bool = False, workers: int = 1,
) -> PathBatch:
    m = tp.model
    args = (tp.u0, m.s0, h, tp.kappa_t, tp.theta_eff, tp.eps_t, m.rho, tp.a, tp.b, qe.phi_c, qe.u_floor)
    return _dispatch(args, _qe_kernel, T, h, N, seed, path_offset, keep_paths, workers)
