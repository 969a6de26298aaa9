import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import load
from oracles import regular_growth, standard_growth
from metldpc.ensemble import from_standard, instantiate, regular
from metldpc.errors import DomainError
from metldpc.growth import (
    binary_entropy,
    csv_header,
    derivative_check,
    growth_curve,
    objective,
    solve_stationary,
    stationary_residuals,
    weight_supremum,
)
from metldpc.spectrum import normalized_log_spectrum


def test_regular_36_at_half_is_rate_times_ln2():
    p = solve_stationary(regular(3, 6), 0.5)
    assert p.gamma == pytest.approx(0.5 * math.log(2), abs=1e-12)
    assert p.t == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("omega", [0.02, 0.1, 0.3, 0.5, 0.7, 0.95])
def test_regular_36_matches_scalar_form(omega):
    assert solve_stationary(regular(3, 6), omega).gamma == pytest.approx(regular_growth(3, 6, omega), abs=1e-8)


def test_single_type_24_stationarity_in_beta():
    spec = load("reg24")
    for omega in (0.05, 0.2, 0.5, 0.8):
        p = solve_stationary(spec, omega)
        mu = 2.0
        assert abs(p.beta[0] / (mu - p.beta[0]) - p.u[0] * p.s[0]) <= 1e-10


@pytest.mark.parametrize("name", ["five_type", "two_type", "punctured"])
def test_multi_type_residuals(name):
    spec = load(name)
    for omega in (0.01, 0.1, 0.3, 0.6):
        p = solve_stationary(spec, omega)
        assert p.residuals <= 1e-10
        r = stationary_residuals(spec, omega, p.t, p.s, p.u, p.beta)
        assert r.max() == p.residuals


def test_five_type_at_tenth_is_consistent_with_finite_lengths():
    spec = load("five_type")
    p = solve_stationary(spec, 0.1)
    assert p.residuals <= 1e-10
    finite = normalized_log_spectrum(spec, [40, 80], Fraction(1, 10))
    gaps = [p.gamma - v for _, v in finite]
    assert gaps[1] < gaps[0]
    assert abs(gaps[1]) < 0.05


def test_objective_is_stationary_in_each_variable():
    spec = load("two_type")
    p = solve_stationary(spec, 0.25)
    h = 1e-6
    base = objective(spec, p.omega, p.t, p.s, p.u, p.beta)
    assert base == pytest.approx(p.gamma, abs=1e-14)
    for vec in ("s", "u"):
        for i in range(spec.k):
            up = {"s": p.s.copy(), "u": p.u.copy()}
            dn = {"s": p.s.copy(), "u": p.u.copy()}
            up[vec][i] *= 1 + h
            dn[vec][i] *= 1 - h
            d = (objective(spec, p.omega, p.t, up["s"], up["u"], p.beta) - objective(spec, p.omega, p.t, dn["s"], dn["u"], p.beta)) / (2 * h)
            assert abs(d) < 1e-7


def test_objective_tends_to_zero_near_zero_weight():
    spec = load("two_type")
    vals = [solve_stationary(spec, w).gamma for w in (1e-2, 1e-3, 1e-4, 1e-5)]
    assert all(abs(b) < abs(a) for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1]) < 1e-3


def test_objective_domain_errors():
    spec = load("reg24")
    with pytest.raises(DomainError):
        objective(spec, 0.3, -1.0, [1.0], [1.0], [0.5])
    with pytest.raises(DomainError):
        objective(spec, 0.3, 1.0, [1.0], [1.0], [2.0])


def test_omega_outside_achievable_range():
    with pytest.raises(DomainError):
        solve_stationary(load("reg24"), 1.0)
    assert weight_supremum(load("reg35")) == pytest.approx(0.8)
    with pytest.raises(DomainError, match="achievable"):
        solve_stationary(load("reg35"), 0.85)


def test_regular_36_slope_diverges_at_zero_weight():
    # radius 1/t of the small-weight matrix is 0, so t grows without bound and
    # the slope -ln t of gamma tends to -infinity
    ps = [solve_stationary(regular(3, 6), w) for w in (1e-2, 1e-4, 1e-6, 1e-8)]
    ts = [p.t for p in ps]
    assert all(b > 3 * a for a, b in zip(ts, ts[1:]))
    assert ps[-1].minus_log_t < -6


def test_slope_identity_at_036():
    spec = regular(3, 6)
    fd, mlt = derivative_check(solve_stationary(spec, 0.3), spec, 1e-3)
    assert abs(fd - mlt) <= 1e-5


@pytest.mark.parametrize("name", ["five_type", "punctured", "radius15"])
def test_slope_identity_quadratic_decay(name):
    spec = load(name)
    p = solve_stationary(spec, 0.2)
    errs = [abs(np.subtract(*derivative_check(p, spec, h))) for h in (1e-2, 1e-3, 1e-4)]
    slopes = [math.log10(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(1.8 < s < 2.2 for s in slopes)


def test_increasing_where_t_below_one():
    curve = growth_curve(load("five_type"), np.linspace(0.02, 0.9, 30))
    for a, b in zip(curve.points, curve.points[1:]):
        if a.t < 1 and b.t < 1:
            assert b.gamma > a.gamma


def test_root_of_growth_matches_scalar_form():
    from scipy.optimize import brentq

    spec = regular(3, 6)
    ours = brentq(lambda w: solve_stationary(spec, w).gamma, 1e-3, 0.2, xtol=1e-13)
    ref = brentq(lambda w: regular_growth(3, 6, w), 1e-3, 0.2, xtol=1e-13)
    assert ours == pytest.approx(ref, abs=1e-6)
    assert 0.02 < ours < 0.03


def test_curve_is_ordered_and_records_branches():
    grid = [0.4, 0.01, 0.2, 0.03]
    curve = growth_curve(load("radius15"), grid)
    assert list(curve.omegas) == sorted(grid)
    assert not curve.failures
    assert all(curve.branch_count[w] >= 1 for w in grid)
    assert {p.branch_id for p in curve.points} <= {"ascending", "descending", "small-weight"}


def test_csv_columns():
    assert csv_header(2) == [
        "omega", "gamma", "t", "minus_log_t", "residual", "branch_id",
        "s_1", "s_2", "u_1", "u_2", "beta_1", "beta_2",
    ]


def test_binary_entropy():
    assert binary_entropy(0.5) == pytest.approx(math.log(2))
    assert binary_entropy(0.0) == 0.0


lams = st.sampled_from([
    {2: Fraction(1, 2), 3: Fraction(1, 2)},
    {2: Fraction(1, 4), 4: Fraction(3, 4)},
    {3: Fraction(1, 3), 5: Fraction(2, 3)},
    {2: Fraction(3, 10), 3: Fraction(2, 10), 6: Fraction(5, 10)},
])
rhos = st.sampled_from([{4: 1}, {6: 1}, {5: Fraction(1, 2), 7: Fraction(1, 2)}, {6: Fraction(1, 3), 8: Fraction(2, 3)}])


@given(lams, rhos, st.floats(0.02, 0.6))
@settings(max_examples=25, deadline=None)
def test_single_type_matches_primal_form(lam, rho, omega):
    spec = from_standard(lam, rho)
    if omega >= weight_supremum(spec) - 1e-3:
        return
    assert solve_stationary(spec, omega).gamma == pytest.approx(standard_growth(lam, rho, omega), abs=1e-7)
