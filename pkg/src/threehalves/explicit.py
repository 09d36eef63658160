"""Weighted explicit simulation of the 3/2 model.

The inverse variance is simulated exactly as a sum of ``n`` squared OU
components with long-run mean theta_n.  The stock follows from the closed-form
solution driven by that path, and a likelihood weight (a deterministic function
of the U path) moves expectations back to the model's own theta_t.  Paths are
stopped the first time U drops to ``delta``.

Draw layout per path and outer step ``i`` (fixed, so paths never interfere):
``i*(n*M + 1) + k*n + l`` feeds OU component ``l`` on fine sub-step ``k``, and
``i*(n*M + 1) + n*M`` is the stock's orthogonal shock.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numba
import numpy as np
from scipy.signal import lfilter

from .errors import DomainError, NonPositiveU
from .params import TransformedParams
from .paths import PathBatch, PathRecord
from .quadrature import SIMPSON13, TRAPEZOID, QuadratureRule, _integrate_inverse
from .rng import RngStream, normal_at, normals, split_seed

__all__ = [
    "ou_step",
    "u_from_ou",
    "s_step",
    "l_step",
    "l_ref",
    "w1_increments",
    "ou_fine_path",
    "draws_per_step",
    "grid_steps",
    "simulate_path",
    "simulate_weighted",
]


def draws_per_step(n: int, M: int) -> int:
    return n * M + 1


def grid_steps(T: float, h: float) -> int:
    """Number of outer steps; raises unless ``h`` tiles ``[0, T]`` exactly."""
    if not (T > 0.0 and h > 0.0):
        raise DomainError(f"T and h must be > 0, got T={T!r}, h={h!r}")
    steps = int(round(T / h))
    if steps < 1 or abs(T / h - steps) > 1e-9 * steps:
        raise DomainError(f"h={h!r} does not tile [0, T={T!r}]")
    return steps


def ou_step(y, alpha_h: float, sigma2_h: float, z) -> np.ndarray:
    """Exact OU transition of every component: ``alpha_h*y + sqrt(sigma2_h)*z``."""
    if sigma2_h < 0.0:
        raise DomainError(f"sigma2_h must be >= 0, got {sigma2_h!r}")
    y = np.asarray(y, dtype=float)
    return alpha_h * y + math.sqrt(sigma2_h) * np.asarray(z, dtype=float)


def u_from_ou(y) -> float:
    y = np.asarray(y, dtype=float)
    return float(np.dot(y, y))


@numba.njit(cache=True, inline="always")
def _s_step(s_t, u_t, u_next, int_u, z, rho_over_eps, a, b, sqrt_1mrho2, h):
    return s_t * math.exp(
        rho_over_eps * math.log(u_next / u_t) + a * h - b * int_u + sqrt_1mrho2 * math.sqrt(int_u) * z
    )


@numba.njit(cache=True, inline="always")
def _l_step(l_t, u_t, u_next, int_u, dt_eff, c, kappa_t, d):
    return l_t * math.exp(c * (math.log(u_next / u_t) + kappa_t * dt_eff + d * int_u))


def s_step(s_t, u_t, u_next, int_u_step, z, tp: TransformedParams, h: float) -> float:
    """Advance the stock over one outer step given the U path on it.

    ``z`` is a standard normal; the orthogonal Brownian integral is
    ``sqrt(int_u_step) * z``.
    """
    if not (u_t > 0.0 and u_next > 0.0):
        raise NonPositiveU(f"U must be > 0, got u_t={u_t!r}, u_next={u_next!r}")
    if int_u_step < 0.0:
        raise DomainError(f"int_u_step must be >= 0, got {int_u_step!r}")
    rho = tp.model.rho
    return float(
        _s_step(s_t, u_t, u_next, int_u_step, z, rho / tp.eps_t, tp.a, tp.b, math.sqrt(1.0 - rho * rho), h)
    )


def l_step(l_t, u_t, u_next, int_u_step, dt_eff, tp: TransformedParams) -> float:
    """Advance the likelihood weight over ``dt_eff = min(h, tau - t)``."""
    if not (u_t > 0.0 and u_next > 0.0):
        raise NonPositiveU(f"U must be > 0, got u_t={u_t!r}, u_next={u_next!r}")
    if not l_t > 0.0:
        raise DomainError(f"l_t must be > 0, got {l_t!r}")
    return float(_l_step(l_t, u_t, u_next, int_u_step, dt_eff, tp.c, tp.kappa_t, tp.d))


def w1_increments(y_path, tp: TransformedParams, dt: float) -> np.ndarray:
    """Reconstruct increments of the driving Brownian motion of U.

    ``y_path`` holds OU vectors on a grid of spacing ``dt`` (shape (K+1, n)).
    The OU innovations are mapped back to Brownian increments with variance
    ``dt`` and projected on the direction Y/|Y| at the left end of each step.
    """
    y = np.asarray(y_path, dtype=float)
    alpha, sigma2 = tp.ou_constants(dt)
    innov = y[1:] - alpha * y[:-1]
    dz = innov * (2.0 / tp.eps_t) * math.sqrt(dt / (4.0 * sigma2 / tp.eps_t**2))
    norm = np.sqrt(np.einsum("ij,ij->i", y[:-1], y[:-1]))
    if np.any(norm <= 0.0):
        raise NonPositiveU("U path touches zero")
    return np.einsum("ij,ij->i", y[:-1], dz) / norm


def l_ref(u_path, w1_incs, dt: float, tp: TransformedParams) -> float:
    """Likelihood weight from its Girsanov (stochastic-integral) form.

    Left-point sums of ``U^{-1/2} dW`` and ``U^{-1} dt`` over a grid of
    spacing ``dt``; ``u_path`` has one more sample than ``w1_incs``.
    """
    u = np.asarray(u_path, dtype=float)[:-1]
    if np.any(u <= 0.0):
        raise NonPositiveU("U path must stay > 0")
    if tp.integer_regime:
        return 1.0
    shift = (tp.theta_n - tp.theta_t) / tp.eps_t
    stoch = np.sum(np.asarray(w1_incs, dtype=float) / np.sqrt(u))
    quad = np.sum(1.0 / u) * dt
    return float(math.exp(-tp.kappa_t * shift * stoch - 0.5 * tp.kappa_t**2 * shift**2 * quad))


def ou_fine_path(tp: TransformedParams, T: float, h: float, M: int, seed: int, path: int) -> np.ndarray:
    """Fine-grid OU vectors of one path, reproducing the kernel's draws.

    Returns an array of shape (T/h*M + 1, n).  Intended for diagnostics and as
    an oracle; the simulation kernel never materialises it.
    """
    steps = int(round(T / h))
    n = tp.n
    per = draws_per_step(n, M)
    z = normals(seed, path, steps * per).reshape(steps, per)[:, : n * M].reshape(steps * M, n)
    alpha, sigma2 = tp.ou_constants(h / M)
    y0 = math.sqrt(tp.u0 / n)
    y = np.empty((steps * M + 1, n))
    y[0] = y0
    y[1:] = lfilter([1.0], [1.0, -alpha], math.sqrt(sigma2) * z, axis=0, zi=np.full((1, n), alpha * y0))[0]
    return y


@numba.njit(nogil=True)
def _weighted_kernel(
    k0, k1, first, count, steps, M, code, n, u0, s0, h,
    alpha, sigma2, rho, eps_t, kappa_t, a, b, c, d, delta,
    s_out, u_out, l_out, tau_out, int_out, s_path, u_path, l_path, keep,
):
    per = n * M + 1
    dx = h / M
    sd = math.sqrt(sigma2)
    rho_over_eps = rho / eps_t
    sq = math.sqrt(1.0 - rho * rho)
    weighted = c != 0.0
    y0 = math.sqrt(u0 / n)
    y = np.empty(n)
    us = np.empty(M + 1)
    for j in range(count):
        path = first + j
        for q in range(n):
            y[q] = y0
        s = s0
        u = u0
        lw = 1.0
        acc = 0.0
        tau = steps * h + h
        if keep:
            s_path[j, 0] = s
            u_path[j, 0] = u
            l_path[j, 0] = lw
        done = steps
        for i in range(steps):
            base = i * per
            us[0] = u
            hit = -1
            for k in range(M):
                tot = 0.0
                off = base + k * n
                for q in range(n):
                    y[q] = alpha * y[q] + sd * normal_at(k0, k1, path, off + q)
                    tot += y[q] * y[q]
                us[k + 1] = tot
                if tot <= delta:
                    hit = k + 1
                    break
            if hit >= 0:
                # Stopped inside this step: weight integrates up to tau only.
                un = us[hit]
                part = _integrate_inverse(us[: hit + 1], hit * dx, code if hit == M else TRAPEZOID)
                if weighted and un > 0.0:
                    lw = _l_step(lw, u, un, part, hit * dx, c, kappa_t, d)
                acc += part
                u = un
                tau = i * h + hit * dx
                done = i
                break
            it = _integrate_inverse(us, h, code)
            z = normal_at(k0, k1, path, base + n * M)
            un = us[M]
            s = _s_step(s, u, un, it, z, rho_over_eps, a, b, sq, h)
            if weighted:
                lw = _l_step(lw, u, un, it, h, c, kappa_t, d)
            acc += it
            u = un
            if keep:
                s_path[j, i + 1] = s
                u_path[j, i + 1] = u
                l_path[j, i + 1] = lw
        if keep:
            for i in range(done, steps):
                s_path[j, i + 1] = s
                u_path[j, i + 1] = u
                l_path[j, i + 1] = lw
        s_out[j] = s
        u_out[j] = u
        l_out[j] = lw
        tau_out[j] = tau
        int_out[j] = acc


def _run_chunk(tp, T, h, rule, seed, delta, first, count, keep):
    steps = grid_steps(T, h)
    k0, k1 = split_seed(seed)
    alpha, sigma2 = tp.ou_constants(h / rule.M)
    s = np.empty(count)
    u = np.empty(count)
    lw = np.empty(count)
    tau = np.empty(count)
    acc = np.empty(count)
    shape = (count, steps + 1) if keep else (0, 0)
    sp, up, lp = np.empty(shape), np.empty(shape), np.empty(shape)
    _weighted_kernel(
        k0, k1, np.uint64(first), count, steps, rule.M, rule.code, tp.n, tp.u0, tp.model.s0, h,
        alpha, sigma2, tp.model.rho, tp.eps_t, tp.kappa_t, tp.a, tp.b, tp.c, tp.d, delta,
        s, u, lw, tau, acc, sp, up, lp, keep,
    )
    return PathBatch(
        s=s, u=u, l=lw, tau=tau, survived=tau > T, int_u=acc, T=T, h=h,
        s_path=sp if keep else None, u_path=up if keep else None, l_path=lp if keep else None,
    )


def _chunks(N: int, workers: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, N, min(workers, N) + 1).astype(int)
    return [(int(lo), int(hi - lo)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def simulate_weighted(
    tp: TransformedParams,
    T: float,
    h: float,
    N: int,
    seed: int,
    rule: QuadratureRule = QuadratureRule("simpson13", 2),
    delta: float = 1e-5,
    *,
    path_offset: int = 0,
    keep_paths: bool = False,
    workers: int = 1,
) -> PathBatch:
    """Simulate ``N`` weighted paths with indices ``path_offset .. path_offset+N-1``.

    The result does not depend on ``workers``: each path draws from its own
    counter-based substream and outputs are stored by path index.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    parts = _chunks(N, workers)
    if len(parts) == 1:
        return _run_chunk(tp, T, h, rule, seed, delta, path_offset, N, keep_paths)
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        futures = [
            pool.submit(_run_chunk, tp, T, h, rule, seed, delta, path_offset + lo, cnt, keep_paths)
            for lo, cnt in parts
        ]
        return PathBatch.concat([f.result() for f in futures])


def simulate_path(config, transformed: TransformedParams, stream: RngStream) -> PathRecord:
    """Simulate the single path ``stream.path`` with full outer-grid trajectories.

    ``config`` needs ``T``, ``h``, ``M``, ``quadrature`` and ``delta``.  The
    stream's counter is advanced by the number of draws the path consumes.
    """
    rule = QuadratureRule(config.quadrature, config.M)
    batch = simulate_weighted(
        transformed, config.T, config.h, 1, stream.seed, rule, config.delta,
        path_offset=stream.path, keep_paths=True,
    )
    stream.counter += int(round(config.T / config.h)) * draws_per_step(transformed.n, config.M)
    return batch.record(0)
