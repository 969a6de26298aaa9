"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line, shown in the terminal summary,
before asserting. Criteria that do not hold for a documented mathematical
reason are strict xfails, so they are still computed and reported.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, SPEC_DIR, load
from oracles import regular_growth, scalar_de_step, stability_product, standard_growth
from metldpc.cli import run
from metldpc.de import _Recursion, de_step, initial_state, stability_threshold, threshold
from metldpc.ensemble import from_standard, instantiate, smallest_n
from metldpc.growth import derivative_check, growth_curve, solve_stationary, weight_supremum
from metldpc.oracle import oracle_spectrum
from metldpc.smallweight import build_matrices, small_weight_report
from metldpc.spectrum import average_weight_distribution

CORPUS = ["reg24", "reg35", "reg36", "two_type", "punctured", "five_type", "radius15", "radius1"]


def record(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def _cli(*argv):
    import io

    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue()


def test_criterion_1_exhaustive_oracle_equals_formula():
    cases = [("reg24", 4), ("two_type", 4), ("punctured", 4)]
    verdicts = []
    for name, n in cases:
        counts = instantiate(load(name), n)
        orc = oracle_spectrum(counts, "exhaustive")
        formula = average_weight_distribution(counts).values
        code, out = _cli("verify", "--spec", SPEC_DIR / f"{name}.met", "--n", n, "--mode", "exhaustive")
        verdicts.append((name, orc.graphs, orc.values == formula and code == 0 and "verdict=EXACT MATCH" in out))
    ok = all(v for _, _, v in verdicts)
    record("1", ok, "; ".join(f"{name} ({g} graphs) {'exact' if v else 'mismatch'}" for name, g, v in verdicts))
    assert ok


UNPUNCTURED_CASES = [(name, m) for name in CORPUS if name not in ("punctured", "five_type") for m in (1, 2)]


def test_criterion_2_zero_weight_count_unpunctured():
    got = {}
    for name, m in UNPUNCTURED_CASES:
        spec = load(name)
        n = m * smallest_n(spec)
        got[(name, n)] = average_weight_distribution(instantiate(spec, n), 0).values[0]
    ok = all(v == 1 for v in got.values())
    record("2a", ok, f"A(0) == 1 exactly for {len(got)} (spec, n) cases without punctured nodes")
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="punctured-only assignments that satisfy every check are counted at transmitted weight 0",
)
def test_criterion_2_zero_weight_count_punctured():
    got = {
        ("punctured", 4): average_weight_distribution(instantiate(load("punctured"), 4), 0).values[0],
        ("five_type", 40): average_weight_distribution(instantiate(load("five_type"), 40), 0).values[0],
    }
    ok = all(v == 1 for v in got.values())
    record("2b", ok, "A(0) for punctured specs: " + ", ".join(f"{k[0]} n={k[1]} -> {v}" for k, v in got.items()))
    assert ok


def test_criterion_3_five_type_reproduction():
    code, out = _cli("info", "--spec", SPEC_DIR / "five_type.met", "--n", 40)
    meta = dict(l[2:].split("=", 1) for l in out.splitlines() if l.startswith("# "))
    info_ok = (
        code == 0
        and meta["E"] == "40 36 24 24 8"
        and meta["edge_balance"] == "exact"
        and meta["design_rate"] == "1/2"
    )
    counts = instantiate(load("five_type"), 40)
    orc = oracle_spectrum(counts, "sampled", samples=100_000, seed=0, max_weight=3)
    formula = average_weight_distribution(counts, 3).values
    z = [abs(float(f) - v) / se for f, v, se in zip(formula, orc.values, orc.stderr)]
    ok = info_ok and max(z) <= 3
    record("3", ok, f"E=({meta['E']}), design rate {meta['design_rate']}, max |z| at weights 0..3 = {max(z):.2f}")
    assert ok


DERIV_GRID = np.linspace(0.1, 0.55, 10)
DERIV_SPECS = ["reg36", "two_type"]


def _derivative_errors(name, h_list):
    spec = load(name)
    out = []
    for w in DERIV_GRID:
        p = solve_stationary(spec, float(w))
        out.append([abs(np.subtract(*derivative_check(p, spec, h))) for h in h_list])
    return np.array(out)


@pytest.mark.xfail(
    strict=True,
    reason="central-difference truncation h^2 gamma'''/6 exceeds 1e-5 at omega=0.1 for (3,6)",
)
def test_criterion_4_derivative_identity_tolerance():
    worst = {name: _derivative_errors(name, [1e-3])[:, 0] for name in DERIV_SPECS}
    ok = all(e.max() <= 1e-5 for e in worst.values())
    detail = ", ".join(
        f"{name} max {e.max():.3e} at omega={DERIV_GRID[e.argmax()]:.2f}" for name, e in worst.items()
    )
    record("4a", ok, f"|FD - (-ln t)| at h=1e-3 on 10 points: {detail}")
    assert ok


def test_criterion_4_quadratic_decay():
    slopes = []
    for name in DERIV_SPECS:
        errs = _derivative_errors(name, [1e-2, 1e-3, 1e-4])
        for row in errs:
            if row[0] < 1e-10:
                continue  # third derivative vanishes, only roundoff remains
            slopes += [math.log10(row[0] / row[1]), math.log10(row[1] / row[2])]
    ok = all(1.9 <= s <= 2.1 for s in slopes)
    record("4b", ok, f"log10 error ratios per decade of h in [{min(slopes):.3f}, {max(slopes):.3f}]")
    assert ok


def test_criterion_5_stationarity_residuals():
    worst = 0.0
    points = 0
    failures = 0
    for name in CORPUS:
        spec = load(name)
        sup = weight_supremum(spec)
        grid = [w for w in np.linspace(0.01, 0.95, 48) if w < sup - 1e-3]
        curve = growth_curve(spec, grid)
        failures += len(curve.failures)
        points += len(curve.points)
        worst = max([worst] + [p.residuals for p in curve.points])
    ok = worst <= 1e-10 and failures == 0
    record("5", ok, f"{points} points over {len(CORPUS)} specs, {failures} failures, max residual {worst:.2e}")
    assert ok


def test_criterion_6_small_weight_slope():
    spec = from_standard({2: Fraction(1, 2), 3: Fraction(1, 2)}, {4: 1})
    rep = small_weight_report(spec)
    target = math.log(1.5)
    omegas = [1e-3 * 10 ** (-j / 4) for j in range(5)]
    pts = {p.omega: p for p in growth_curve(spec, omegas).points}
    gaps = [abs(pts[w].gamma / w - target) for w in omegas]
    first = gaps[0] <= 5e-2 and rep.radius_exact == Fraction(3, 2)
    shrinking = all(b < a for a, b in zip(gaps, gaps[1:]))
    reg = from_standard({3: 1}, {6: 1})
    halvings = [1e-2 / 2**j for j in range(12)]
    rpts = {p.omega: p for p in growth_curve(reg, halvings).points}
    ratios = [rpts[w].gamma / w for w in halvings]
    steps = np.diff(ratios)
    unbounded = bool(np.all(steps < -0.3))
    ok = first and shrinking and unbounded
    record(
        "6",
        ok,
        f"radius {rep.radius_exact}, gap at 1e-3 {gaps[0]:.4f}, at 1e-4 {gaps[-1]:.4f}, "
        f"(3,6) ratio {ratios[0]:.3f} -> {ratios[-1]:.3f} with every halving below -0.3",
    )
    assert ok


STANDARD_PAIRS = [
    ({3: 1}, {6: 1}),
    ({2: Fraction(1, 2), 3: Fraction(1, 2)}, {4: 1}),
    ({2: Fraction(1, 4), 3: Fraction(1, 4), 6: Fraction(1, 2)}, {5: Fraction(1, 3), 7: Fraction(2, 3)}),
    ({2: Fraction(2, 7), 4: Fraction(5, 7)}, {6: 1}),
]


def test_criterion_7_standard_reduction():
    exact_ok = True
    for lam, rho in STANDARD_PAIRS:
        spec = from_standard(lam, rho)
        for eps in (Fraction(1), Fraction(1, 2), Fraction(3, 7)):
            got = build_matrices(spec, (1, eps)).product_exact()[0][0]
            exact_ok &= got == eps * stability_product(lam, rho)
    grid = np.linspace(0.02, 0.78, 20)
    worst = 0.0
    for (dv, dc) in ((3, 6), (2, 4), (3, 5), (4, 8)):
        curve = growth_curve(from_standard({dv: 1}, {dc: 1}), grid)
        worst = max([worst] + [abs(p.gamma - regular_growth(dv, dc, p.omega)) for p in curve.points])
        exact_ok &= len(curve.points) == 20
    lam, rho = STANDARD_PAIRS[2]
    curve = growth_curve(from_standard(lam, rho), grid)
    worst = max([worst] + [abs(p.gamma - standard_growth(lam, rho, p.omega)) for p in curve.points])
    ok = exact_ok and worst <= 1e-6
    record("7", ok, f"exact radius == eps*lambda'(0)*rho'(1) on {len(STANDARD_PAIRS)} pairs; max |gamma - scalar| {worst:.2e}")
    assert ok


def _random_standard_pair(rng):
    def dist(pool, extra):
        degs = sorted({int(x) for x in rng.choice(pool, size=int(rng.integers(1, 4)))} | extra)
        w = rng.integers(1, 20, size=len(degs))
        return {d: Fraction(int(x), int(w.sum())) for d, x in zip(degs, w)}

    return dist(np.arange(2, 9), {2}), dist(np.arange(3, 13), set())


def test_criterion_8_density_evolution():
    lam, rho = {3: 1}, {6: 1}
    spec = from_standard(lam, rho)
    rec = _Recursion(spec)
    worst = 0.0
    for eps in (0.3, 0.42, 0.43, 0.6):
        state = initial_state(spec, eps)
        p = eps
        for _ in range(200):
            state = de_step(spec, eps, state, rec)
            p = scalar_de_step(lam, rho, eps, p)
            worst = max(worst, abs(state.p[0] - p))
            assert abs(eps * (1 - (1 - p) ** 5) ** 2 - scalar_de_step(lam, rho, eps, p)) <= 1e-15
    stars = [threshold(spec, 1e-4, zero_threshold=z).epsilon_star for z in (1e-11, 1e-12, 1e-13)]
    spread = max(stars) - min(stars)
    rng = np.random.default_rng(20240601)
    violations = 0
    for _ in range(50):
        s = from_standard(*_random_standard_pair(rng))
        if threshold(s, 1e-4).epsilon_star > stability_threshold(s)[0]:
            violations += 1
    ok = worst <= 1e-15 and spread <= 1e-4 and violations == 0
    record(
        "8",
        ok,
        f"max per-step deviation {worst:.1e}, eps* spread {spread:.1e} over zero thresholds 1e-11..1e-13, "
        f"{violations}/50 random specs with eps* > eps_stab",
    )
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="the (2,4) finite-length gap is not monotone in n: it grows from n=4 to n=8 before shrinking",
)
def test_criterion_9_finite_length_trend():
    spec = from_standard({2: 1}, {4: 1})
    target = solve_stationary(spec, 0.5).gamma
    gaps = []
    for n in (4, 8, 12, 16, 20):
        a = average_weight_distribution(instantiate(spec, n), n // 2).values[n // 2]
        gaps.append(target - (math.log(a.numerator) - math.log(a.denominator)) / n)
    ok = all(b < a for a, b in zip(gaps, gaps[1:]))
    record("9", ok, "gap gamma(1/2) - ln A(n/2)/n for n=4..20: " + ", ".join(f"{g:.5f}" for g in gaps))
    assert ok
