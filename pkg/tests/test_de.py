from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import load
from oracles import scalar_de_step, stability_product
from metldpc.de import (
    de_run,
    de_step,
    initial_state,
    stability_check,
    stability_threshold,
    stability_vs_threshold,
    sweep,
    threshold,
)
from metldpc.ensemble import from_standard, make_spec, regular
from metldpc.errors import DomainError

RADIUS_15 = ({2: Fraction(1, 2), 3: Fraction(1, 2)}, {4: 1})


@given(st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=200)
def test_single_step_matches_scalar_recursion(eps, p):
    spec = regular(3, 6)
    state = initial_state(spec, eps)
    state = type(state)(np.array([p]), 0)
    ours = de_step(spec, eps, state).p[0]
    assert abs(ours - eps * (1 - (1 - p) ** 5) ** 2) <= 1e-15


@given(st.floats(0, 1))
@settings(max_examples=50, deadline=None)
def test_irregular_trajectory_matches_scalar_recursion(eps):
    spec = from_standard(*RADIUS_15)
    state = initial_state(spec, eps)
    p = eps
    for _ in range(30):
        state = de_step(spec, eps, state)
        p = scalar_de_step(*RADIUS_15, eps, p)
        assert abs(state.p[0] - p) <= 1e-15


def test_zero_erasure_converges_immediately():
    for name in ("reg36", "two_type", "five_type", "punctured"):
        res = de_run(load(name), 0.0)
        assert res.converged_to_zero and res.iterations <= 2


def test_full_erasure_is_fixed():
    res = de_run(regular(3, 6), 1.0, max_iters=10)
    assert res.fixed_point.p[0] == 1.0 and not res.converged_to_zero


@pytest.mark.parametrize("eps, ok", [(0.40, True), (0.45, False)])
def test_regular_36_runs(eps, ok):
    res = de_run(regular(3, 6), eps)
    assert res.converged_to_zero is ok
    if not ok:
        assert res.final_max_p > 0.1


def test_thresholds():
    t36 = threshold(regular(3, 6))
    assert t36.epsilon_star == pytest.approx(0.4294, abs=1e-3)
    assert not t36.degenerate
    assert t36.epsilon_star < threshold(regular(3, 5)).epsilon_star


def test_negative_rate_is_degenerate():
    # rate 1 - 2 < 0 with degree-one checks: every message is recovered at once
    spec = make_spec(1, [(1, (0, 1), (2,))], [(2, (1,))])
    res = threshold(spec)
    assert res.epsilon_star == 1.0 and res.degenerate


def test_zero_rate_cycle_ensemble_threshold_just_below_one():
    # p' = eps * p: converges for every eps < 1 but not at eps = 1
    spec = make_spec(1, [(1, (0, 1), (2,))], [(1, (2,))])
    res = threshold(spec)
    assert 0.99 < res.epsilon_star < 1.0 and not res.degenerate


def test_degree_one_transmitted_nodes_pin_messages():
    res = threshold(load("five_type"))
    assert res.epsilon_star == 0.0 and res.degenerate


@pytest.mark.parametrize("name", ["reg36", "two_type", "radius15", "radius1"])
def test_trajectory_non_increasing_for_unpunctured(name):
    for eps in (0.2, 0.35, 0.5, 0.7):
        traj = de_run(load(name), eps).trajectory_summary
        assert np.all(np.diff(traj) <= 1e-15)


@given(st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=40, deadline=None)
def test_monotone_in_epsilon(e1, e2):
    lo, hi = sorted((e1, e2))
    spec = load("two_type")
    a, b = initial_state(spec, lo), initial_state(spec, hi)
    for _ in range(25):
        a, b = de_step(spec, lo, a), de_step(spec, hi, b)
        assert np.all(a.p <= b.p + 1e-15)


def test_stability_examples():
    radius, stable = stability_check(from_standard(*RADIUS_15), 0.5)
    assert radius == pytest.approx(0.75) and stable
    assert stability_check(from_standard(*RADIUS_15), 0) == (0.0, True)
    radius, stable = stability_check(load("five_type"), 0.99)
    assert radius == pytest.approx(0.99) and stable


@given(st.fractions(0, 1, max_denominator=50))
@settings(max_examples=30)
def test_stability_radius_is_epsilon_times_standard_product(eps):
    radius, _ = stability_check(from_standard(*RADIUS_15), eps)
    assert radius == pytest.approx(float(eps * stability_product(*RADIUS_15)), abs=1e-14)


def test_stability_threshold_closed_forms():
    stab, exact, linear = stability_threshold(from_standard(*RADIUS_15))
    assert exact == Fraction(2, 3) and linear
    stab, exact, linear = stability_threshold(regular(3, 6))
    assert stab == float("inf")
    cmp = stability_vs_threshold(regular(3, 6))
    assert cmp.unconditionally_stable and cmp.consistent


def test_stability_bound_from_punctured_degree_two_uses_bisection():
    spec = make_spec(
        2,
        [(1, (0, 1), (3, 1)), (Fraction(1, 2), (1, 0), (0, 2))],
        [(Fraction(3, 4), (4, 0)), (Fraction(1, 2), (0, 4))],
    )
    stab, exact, linear = stability_threshold(spec)
    assert not linear and exact is None
    r_lo, _ = stability_check(spec, max(stab - 1e-6, 0.0))
    r_hi, _ = stability_check(spec, min(stab + 1e-6, 1.0))
    assert r_lo < 1.0 or stab == 0.0
    assert r_hi >= 1.0 or stab == float("inf")


def test_sweep_rows():
    rows = sweep(regular(3, 6), [0.3, 0.5])
    assert rows[0][1] == 1 and rows[1][1] == 0
    assert rows[0][0] == 0.3


def test_epsilon_domain():
    with pytest.raises(DomainError):
        de_run(regular(3, 6), 1.5)
    with pytest.raises(DomainError):
        stability_check(regular(3, 6), Fraction(3, 2))
