import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from threehalves.benchmarks import (
    QeConfig,
    milstein_s_step,
    milstein_u_step,
    qe_moments,
    qe_s_step,
    qe_sample,
    qe_u_step,
    simulate_milstein,
    simulate_qe,
)
from threehalves.errors import DomainError, NonPositiveU
from threehalves.explicit import s_step, simulate_weighted
from threehalves.params import PARAMETER_SETS, ModelParams, transform
from threehalves.pricing import PayoffSpec, estimate_price

PS2 = transform(PARAMETER_SETS["PS2"])
PS3 = transform(PARAMETER_SETS["PS3"])


def test_milstein_u_examples():
    tp, h, u = PS2, 0.02, 10.0
    expected = u + tp.kappa_t * (tp.theta_t - u) * h - 0.25 * tp.eps_t**2 * h
    assert milstein_u_step(u, h, tp, 0.0) == pytest.approx(expected, rel=1e-14)
    assert milstein_u_step(u, 0.0, tp, 1.3) == u
    assert milstein_u_step(tp.theta_t, h, tp, 0.0) == pytest.approx(tp.theta_t - tp.eps_t**2 * h / 4, rel=1e-14)


def test_milstein_s_examples():
    assert milstein_s_step(100.0, 4.0, 0.02, 0.03, -0.5, 0.0, 0.0) == pytest.approx(
        100 * math.exp((0.03 - 0.125) * 0.02), rel=1e-14
    )
    a = milstein_s_step(100.0, 4.0, 0.02, 0.0, 0.0, 0.7, -0.3)
    b = milstein_s_step(100.0, 4.0, 0.02, 0.0, 0.9, 0.7, -0.3, correlated=False)
    c = milstein_s_step(100.0, 4.0, 0.02, 0.0, 0.9, 5.0, -0.3, correlated=False)
    assert a == b == c
    # Independent arithmetic: 100 exp(-0.0006 + sqrt(0.0012)).
    assert milstein_s_step(100.0, 1 / 0.06, 0.02, 0.0, 0.0, 0.0, 1.0) == pytest.approx(103.4627042277226, rel=1e-13)
    with pytest.raises(NonPositiveU):
        milstein_s_step(100.0, 0.0, 0.02, 0.0, 0.0, 0.0, 1.0)


def test_qe_quadratic_branch_example():
    assert qe_sample(1.0, 0.5, 0.5) == pytest.approx(0.8660254037844385, rel=1e-12)


def test_qe_exponential_branch_examples():
    qe = QeConfig(phi_c=1.5)
    assert qe_sample(1.0, 2.0, 0.5, qe) == pytest.approx(0.4315231086776713, rel=1e-12)
    assert qe_sample(1.0, 2.0, 0.2, qe) == qe.u_floor
    assert qe_sample(1.0, 2.0, 1 / 3, qe) == qe.u_floor


def test_qe_rejects_bad_inputs():
    with pytest.raises(DomainError):
        QeConfig(phi_c=2.5)
    with pytest.raises(DomainError):
        qe_sample(1.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        qe_u_step(0.0, 0.02, PS2, QeConfig(), 0.5)


@given(st.floats(0.01, 1.5 - 1e-9), st.floats(0.1, 100.0))
def test_qe_quadratic_mean_matches(phi, m):
    inv = 2 / phi
    b2 = inv - 1 + math.sqrt(inv) * math.sqrt(inv - 1)
    a = m / (1 + b2)
    assert a * (1 + b2) == pytest.approx(m, rel=1e-12)
    assert 2 * a * a * (1 + 2 * b2) == pytest.approx(phi * m * m, rel=1e-9)


@given(st.floats(1.5, 50.0), st.floats(0.1, 100.0))
def test_qe_exponential_mean_matches(phi, m):
    p = (phi - 1) / (phi + 1)
    beta = (1 - p) / m
    assert (1 - p) / beta == pytest.approx(m, rel=1e-12)


def test_qe_moments_against_cir_closed_form():
    u, h = 12.0, 0.3
    m, s2 = qe_moments(u, h, PS2)
    k, th, e = PS2.kappa_t, PS2.theta_t, PS2.eps_t
    ekh = math.exp(-k * h)
    assert m == pytest.approx(th + (u - th) * ekh, rel=1e-14)
    assert s2 == pytest.approx(u * e * e * ekh / k * (1 - ekh) + th * e * e / (2 * k) * (1 - ekh) ** 2, rel=1e-14)


def test_qe_s_step_matches_explicit_step():
    u = 1 / 0.06
    assert qe_s_step(100.0, u, u, 0.02, PS2, 0.0) == pytest.approx(100.26661808524375, rel=1e-13)
    tp = transform(ModelParams(100.0, 0.06, 2.0, 1.5, 0.2, 0.0, 0.05))
    assert qe_s_step(100.0, 3.0, 3.0, 0.02, tp, 0.0) == pytest.approx(
        s_step(100.0, 3.0, 3.0, 0.02 / 3.0, 0.0, tp, 0.02), rel=1e-15
    )


def test_benchmark_batches_are_deterministic_and_unweighted():
    for sim in (simulate_milstein, simulate_qe):
        a = sim(PS2, 1.0, 0.02, 301, 3, workers=1, keep_paths=True)
        b = sim(PS2, 1.0, 0.02, 301, 3, workers=3, keep_paths=True)
        assert np.array_equal(a.s, b.s) and np.array_equal(a.s_path, b.s_path)
        assert np.all(a.l == 1.0) and np.all(a.survived)
        assert np.all(np.isfinite(a.s))


def test_qe_u_stays_above_floor():
    batch = simulate_qe(PS2, 1.0, 0.02, 2000, 11, keep_paths=True)
    assert batch.u_path.min() >= QeConfig().u_floor


def test_grid_must_tile():
    with pytest.raises(DomainError):
        simulate_milstein(PS3, 0.5, 0.04, 10, 1)


def test_milstein_price_error_shrinks_with_h():
    # PS3 ATM at T=1; reference from the weighted scheme, which samples U exactly.
    ref = estimate_price(simulate_weighted(PS3, 1.0, 0.01, 200_000, 99), PayoffSpec(strike=100.0))
    errs = []
    for h in (0.04, 0.02, 0.01):
        batch = simulate_milstein(PS3, 1.0, h, 100_000, 1)
        ok = np.isfinite(batch.s)
        # Coarse steps can drive U through zero; such paths are flagged with NaN.
        assert ok.mean() > 0.999
        payoff = np.maximum(batch.s[ok] - 100.0, 0.0)
        errs.append((abs(payoff.mean() - ref.price), payoff.std() / math.sqrt(ok.sum())))
    tol = 3 * math.hypot(errs[-1][1], ref.std_error)
    assert errs[-1][0] <= errs[0][0] + tol
    assert errs[-1][0] <= tol
