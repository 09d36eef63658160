"""Experiment runner: repeated price estimates, error statistics, timings and reports."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__
from .benchmarks import QeConfig, simulate_milstein, simulate_qe
from .config import SimConfig
from .errors import ConfigError, DomainError, NumericalFailure
from .explicit import simulate_weighted
from .params import TransformedParams, transform
from .paths import PathBatch
from .pricing import ErrorStats, PayoffSpec, PriceEstimate, error_stats, estimate_price, exact_price
from .quadrature import QuadratureRule
from .rng import derive_seed

__all__ = [
    "CSV_COLUMNS",
    "LONG_OU_COUNT",
    "GRID_MATURITY",
    "REFERENCE_REL_MSE_PCT",
    "StrikeResult",
    "ExperimentReport",
    "simulate_scheme",
    "run_experiment",
    "benchmark_timing",
    "emit_report",
    "emit_reports",
    "report_from_json",
    "rel_mse_grid",
]

# Weighted runs needing more OU components than this are "long" and must be
# requested explicitly.
LONG_OU_COUNT = 64

CSV_COLUMNS = (
    "scheme", "parameter_set", "T", "h", "M", "N", "repetitions", "moneyness", "strike",
    "price", "se", "exact", "mse", "rel_mse_pct", "seconds",
)

GRID_MATURITY = {"PS1": 1.0, "PS2": 0.5, "PS3": 0.5}

# Relative MSE (% of the exact price) keyed by (set, M, N).
REFERENCE_REL_MSE_PCT: dict[tuple[str, int, int], float] = {
    ("PS1", 2, 5000): 0.271, ("PS1", 4, 5000): 0.316,
    ("PS2", 2, 5000): 0.183, ("PS2", 4, 5000): 0.225,
    ("PS3", 2, 5000): 0.239, ("PS3", 4, 5000): 0.214,
    ("PS1", 2, 10000): 0.203, ("PS1", 4, 10000): 0.158,
    ("PS2", 2, 10000): 0.111, ("PS2", 4, 10000): 0.112,
    ("PS3", 2, 10000): 0.172, ("PS3", 4, 10000): 0.143,
    ("PS1", 2, 50000): 0.158, ("PS1", 4, 50000): 0.135,
    ("PS2", 2, 50000): 0.085, ("PS2", 4, 50000): 0.083,
    ("PS3", 2, 50000): 0.067, ("PS3", 4, 50000): 0.070,
}


@dataclass
class StrikeResult:
    moneyness: float
    strike: float
    estimates: list[PriceEstimate]
    stats: ErrorStats | None = None

    @property
    def mean_price(self) -> float:
        return math.fsum(e.price for e in self.estimates) / len(self.estimates)

    @property
    def mean_std_error(self) -> float:
        k = len(self.estimates)
        return math.sqrt(math.fsum(e.std_error**2 for e in self.estimates)) / k

    def to_dict(self) -> dict[str, Any]:
        return {
            "moneyness": self.moneyness,
            "strike": self.strike,
            "estimates": [e.to_dict() for e in self.estimates],
            "stats": None if self.stats is None else self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StrikeResult:
        return cls(
            moneyness=data["moneyness"],
            strike=data["strike"],
            estimates=[PriceEstimate(**e) for e in data["estimates"]],
            stats=None if data["stats"] is None else ErrorStats(**data["stats"]),
        )


@dataclass
class ExperimentReport:
    """Result of :func:`run_experiment`.

    ``config`` echoes the full :class:`SimConfig`, so ``SimConfig.from_dict``
    on it re-runs the experiment.  ``seconds`` holds one wall time per
    repetition, measured around simulation and estimation only.  ``flags``
    records the scheme variant (OU count, regime, coefficient choices).
    """

    config: dict[str, Any]
    results: list[StrikeResult]
    seconds: list[float]
    flags: dict[str, Any] = field(default_factory=dict)

    @property
    def scheme(self) -> str:
        return self.config["scheme"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "results": [r.to_dict() for r in self.results],
            "seconds": self.seconds,
            "flags": self.flags,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentReport:
        return cls(
            config=data["config"],
            results=[StrikeResult.from_dict(r) for r in data["results"]],
            seconds=list(data["seconds"]),
            flags=dict(data["flags"]),
        )


def simulate_scheme(
    config: SimConfig, tp: TransformedParams, seed: int, *, N: int | None = None, keep_paths: bool = False
) -> PathBatch:
    """Simulate ``N`` (default ``config.N``) paths of the configured scheme."""
    n = config.N if N is None else N
    if config.scheme == "weighted":
        rule = QuadratureRule(config.quadrature, config.M)
        return simulate_weighted(
            tp, config.T, config.h, n, seed, rule, config.delta, keep_paths=keep_paths, workers=config.workers
        )
    if config.scheme == "milstein":
        return simulate_milstein(
            tp, config.T, config.h, n, seed,
            correlated=config.milstein_correlated, keep_paths=keep_paths, workers=config.workers,
        )
    return simulate_qe(
        tp, config.T, config.h, n, seed, QeConfig(phi_c=config.phi_c, u_floor=config.delta),
        keep_paths=keep_paths, workers=config.workers,
    )


def _check_finite(batch: PathBatch) -> None:
    bad = ~(np.isfinite(batch.s) & np.isfinite(batch.l) & np.isfinite(batch.u))
    if bad.any():
        first = int(np.flatnonzero(bad)[0])
        raise NumericalFailure(f"{int(bad.sum())} path(s) produced NaN/Inf (first: path {first})")


def _prepare(config: SimConfig, allow_long: bool) -> TransformedParams:
    config.validate()
    try:
        tp = transform(config.model_params(), integer_tol=config.integer_tol, l_coefficient=config.l_coefficient)
    except DomainError as exc:
        raise ConfigError(str(exc), "model" if config.parameter_set == "custom" else "parameter_set") from exc
    if config.scheme == "weighted" and tp.n > LONG_OU_COUNT and not allow_long:
        raise ConfigError(
            f"{config.parameter_set} needs {tp.n} OU components; pass --long (allow_long=True) to run it",
            "parameter_set",
        )
    return tp


def _flags(config: SimConfig, tp: TransformedParams) -> dict[str, Any]:
    return {
        "version": __version__,
        "scheme": config.scheme,
        "ou_count": tp.n,
        "ratio": tp.ratio,
        "integer_regime": tp.integer_regime,
        "l_coefficient": config.l_coefficient,
        "quadrature": config.quadrature,
        "milstein_correlated": config.milstein_correlated,
    }


def _warm_up(config: SimConfig, tp: TransformedParams) -> None:
    # Triggers JIT compilation outside the timed region.
    simulate_scheme(config, tp, config.seed, N=1)


def run_experiment(config: SimConfig, *, allow_long: bool = False) -> ExperimentReport:
    """Run ``config.repetitions`` independent price estimates.

    Repetition ``k`` uses the seed ``derive_seed(config.seed, k)``.  Error
    statistics are attached for strikes with a reference price, taken from
    ``config.exact_prices`` or the built-in fixtures.

    Raises:
        ConfigError: invalid configuration, or a long run without ``allow_long``.
        NumericalFailure: a path produced NaN or Inf.
    """
    tp = _prepare(config, allow_long)
    s0, r = tp.model.s0, tp.model.r
    payoffs = [PayoffSpec(strike=k * s0, r=r) for k in config.strikes]
    estimates: list[list[PriceEstimate]] = [[] for _ in payoffs]
    seconds = []
    _warm_up(config, tp)
    for rep in range(config.repetitions):
        start = time.perf_counter()
        batch = simulate_scheme(config, tp, derive_seed(config.seed, rep))
        _check_finite(batch)
        for out, payoff in zip(estimates, payoffs):
            out.append(estimate_price(batch, payoff))
        seconds.append(time.perf_counter() - start)
    results = []
    for i, (k, payoff) in enumerate(zip(config.strikes, payoffs)):
        if config.exact_prices is not None:
            ref = config.exact_prices[i]
        else:
            ref = exact_price(config.parameter_set, k, config.T)
        stats = error_stats(estimates[i], ref) if ref is not None and len(estimates[i]) >= 2 else None
        results.append(StrikeResult(moneyness=float(k), strike=payoff.strike, estimates=estimates[i], stats=stats))
    return ExperimentReport(config=config.to_dict(), results=results, seconds=seconds, flags=_flags(config, tp))


def benchmark_timing(config: SimConfig, *, repeats: int = 3, allow_long: bool = False) -> float:
    """Median wall time (seconds) of one full price estimate at ``config.N`` paths."""
    tp = _prepare(config, allow_long)
    payoffs = [PayoffSpec(strike=k * tp.model.s0, r=tp.model.r) for k in config.strikes]
    _warm_up(config, tp)
    times = []
    for rep in range(repeats):
        start = time.perf_counter()
        batch = simulate_scheme(config, tp, derive_seed(config.seed, rep))
        for payoff in payoffs:
            estimate_price(batch, payoff)
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def _rows(report: ExperimentReport) -> list[dict[str, Any]]:
    cfg = report.config
    seconds = statistics.fmean(report.seconds) if report.seconds else 0.0
    rows = []
    for res in report.results:
        st = res.stats
        rows.append({
            "scheme": cfg["scheme"],
            "parameter_set": cfg["parameter_set"],
            "T": cfg["T"],
            "h": cfg["h"],
            "M": cfg["M"],
            "N": cfg["N"],
            "repetitions": cfg["repetitions"],
            "moneyness": res.moneyness,
            "strike": res.strike,
            "price": repr(res.mean_price),
            "se": repr(res.mean_std_error),
            "exact": "" if st is None else repr(st.exact_price),
            "mse": "" if st is None else repr(st.mse),
            "rel_mse_pct": "" if st is None else repr(st.rel_mse_pct),
            "seconds": repr(seconds),
        })
    return rows


def emit_reports(reports: Sequence[ExperimentReport], fmt: str = "csv", *, include_timing: bool = True) -> bytes:
    """Serialise several reports.

    ``csv`` gives one row per scheme x strike x N with the columns in
    :data:`CSV_COLUMNS` (``seconds`` is dropped when ``include_timing`` is
    false).  ``json`` gives a list of full nested reports.
    """
    if fmt == "csv":
        columns = [c for c in CSV_COLUMNS if include_timing or c != "seconds"]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for report in reports:
            writer.writerows(_rows(report))
        return buf.getvalue().encode()
    if fmt == "json":
        docs = [r.to_dict() for r in reports]
        if not include_timing:
            for d in docs:
                d["seconds"] = []
        return json.dumps(docs, indent=2, sort_keys=True).encode()
    raise ValueError(f"unknown report format {fmt!r}; expected 'csv' or 'json'")


def emit_report(report: ExperimentReport, fmt: str = "csv", *, include_timing: bool = True) -> bytes:
    """Serialise one report; JSON output is a single object rather than a list."""
    if fmt == "json":
        doc = report.to_dict()
        if not include_timing:
            doc["seconds"] = []
        return json.dumps(doc, indent=2, sort_keys=True).encode()
    return emit_reports([report], fmt, include_timing=include_timing)


def report_from_json(data: bytes | str) -> ExperimentReport | list[ExperimentReport]:
    doc = json.loads(data)
    if isinstance(doc, list):
        return [ExperimentReport.from_dict(d) for d in doc]
    return ExperimentReport.from_dict(doc)


def rel_mse_grid(
    sets: Sequence[str] = ("PS1", "PS2", "PS3"),
    Ms: Sequence[int] = (2, 4),
    Ns: Sequence[int] = (5000, 10000, 50000),
    *,
    repetitions: int = 20,
    seed: int = SimConfig.seed,
    h: float = 0.02,
    workers: int = 1,
    allow_long: bool = False,
) -> list[ExperimentReport]:
    """Relative-MSE grid of the weighted scheme at the money (sets x M x N)."""
    reports = []
    for name in sets:
        for M in Ms:
            for N in Ns:
                cfg = SimConfig(
                    parameter_set=name, scheme="weighted", T=GRID_MATURITY[name], h=h, M=M, N=N,
                    strikes=[1.0], repetitions=repetitions, seed=seed, workers=workers,
                )
                reports.append(run_experiment(cfg, allow_long=allow_long))
    return reports
