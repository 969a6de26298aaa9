"""Asymptotic growth rate gamma(omega) of the average weight distribution.

For a fixed normalised weight omega the exponent is

    gamma = log Q(t, s) + log P(u) - sum_i beta_i log(u_i s_i) - omega log t
            - sum_i mu_i h(beta_i / mu_i)

at a stationary point, where

    omega   = t dlogQ/dt                       (weight constraint)
    beta_i  = u_i dlogP/du_i = s_i dlogQ/ds_i  (active-edge fractions)
    beta_i / (mu_i - beta_i) = u_i s_i         (stationarity in beta)

Q(t, s) = prod (1 + t^{b1} s^d)^{nu_{b,d}} and P(u) = prod f_d(u)^{mu_d}.

The system is solved jointly by Newton's method in the log variables
(log t, log s, log u), which keeps every variable positive and makes
``log Q`` a weighted sum of softplus terms and ``log P`` a weighted sum of
log-sum-exp terms, both with closed-form Hessians. Solutions are traced from
omega = 1/2, where t = s = u = 1 is exact for ensembles without degree-one
checks, by continuation in logit(omega).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit, logsumexp, softmax, xlogy

from .ensemble import EnsembleSpec, edge_fractions
from .errors import ConvergenceError, DomainError
from .spectrum import check_constellation_poly

TOL = 1e-10
BETA_BARRIER = 1e-14
MAX_NEWTON = 60
MAX_LOG_STEP = 4.0

CSV_HEADER = ["omega", "gamma", "t", "minus_log_t", "residual", "branch_id"]


def binary_entropy(x):
    """h(x) = -x ln x - (1-x) ln(1-x) in nats."""
    x = np.asarray(x, dtype=float)
    return -xlogy(x, x) - xlogy(1.0 - x, 1.0 - x)


@dataclass
class StationaryPoint:
    omega: float
    t: float
    s: np.ndarray
    u: np.ndarray
    beta: np.ndarray
    gamma: float
    residuals: float
    branch_id: str = ""
    iterations: int = 0

    @property
    def minus_log_t(self) -> float:
        return -math.log(self.t)

    @property
    def log_vector(self) -> np.ndarray:
        return np.concatenate(([math.log(self.t)], np.log(self.s), np.log(self.u)))

    def row(self) -> list:
        return (
            [self.omega, self.gamma, self.t, self.minus_log_t, self.residuals, self.branch_id]
            + list(self.s)
            + list(self.u)
            + list(self.beta)
        )


def csv_header(k: int) -> List[str]:
    return (
        CSV_HEADER
        + [f"s_{i + 1}" for i in range(k)]
        + [f"u_{i + 1}" for i in range(k)]
        + [f"beta_{i + 1}" for i in range(k)]
    )


@dataclass
class GrowthCurve:
    points: List[StationaryPoint]
    failures: List[Tuple[float, str]] = field(default_factory=list)
    branch_count: Dict[float, int] = field(default_factory=dict)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([p.gamma for p in self.points])


# --- model ------------------------------------------------------------------


def weight_supremum(spec: EnsembleSpec) -> float:
    """Largest normalised weight compatible with the check-side parity constraints.

    Linear program over the fraction theta of each variable node-type set to
    one and, per check node-type, convex weights over its even active-edge
    patterns; the per-type active-edge counts of both sides must agree.
    """
    k = spec.k
    nv = len(spec.var_terms)
    patterns = [[ex for ex, _ in check_constellation_poly(t.d)] for t in spec.chk_terms]
    nw = sum(len(p) for p in patterns)
    n = nv + nw
    c = np.zeros(n)
    a_eq = np.zeros((k + len(patterns), n))
    b_eq = np.zeros(k + len(patterns))
    for j, t in enumerate(spec.var_terms):
        if t.transmitted:
            c[j] = -float(t.coeff)
        a_eq[:k, j] = float(t.coeff) * np.array(t.d, dtype=float)
    col = nv
    for r, (t, pats) in enumerate(zip(spec.chk_terms, patterns)):
        for ex in pats:
            a_eq[:k, col] = -float(t.coeff) * np.array(ex, dtype=float)
            a_eq[k + r, col] = 1.0
            col += 1
        b_eq[k + r] = 1.0
    bounds = [(0.0, 1.0)] * nv + [(0.0, None)] * nw
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:  # pragma: no cover - the all-zero point is always feasible
        raise DomainError(f"weight range LP failed: {res.message}")
    return float(-res.fun)


class _Model:
    """log Q and log P with derivatives in the log variables."""

    def __init__(self, spec: EnsembleSpec):
        k = spec.k
        self.spec = spec
        self.k = k
        self.q_rows = np.array([(t.channel[1],) + t.d for t in spec.var_terms], dtype=float)
        self.q_w = np.array([float(t.coeff) for t in spec.var_terms])
        self.omega_max = weight_supremum(spec)
        self.mu = np.array([float(x) for x in edge_fractions(spec)])
        self.p_terms = []
        reach = np.zeros(k, dtype=bool)
        for t in spec.chk_terms:
            poly = check_constellation_poly(t.d)
            e = np.array([ex for ex, _ in poly], dtype=float).reshape(-1, k)
            logc = np.log(np.array([float(c) for _, c in poly]))
            self.p_terms.append((float(t.coeff), logc, e))
            reach |= e.max(axis=0) > 0
        if not reach.all():
            bad = [i + 1 for i in range(k) if not reach[i]]
            raise DomainError(f"edge types {bad} only meet degree-one checks; their active fraction is pinned at 0")

    def split(self, x):
        k = self.k
        return x[: 1 + k], x[1 + k :]

    def q_parts(self, y):
        z = self.q_rows @ y
        sg = expit(z)
        w = self.q_w * sg
        grad = self.q_rows.T @ w
        hess = (self.q_rows.T * (w * (1.0 - sg))) @ self.q_rows
        return float(self.q_w @ np.logaddexp(0.0, z)), grad, hess

    def p_parts(self, v):
        k = self.k
        val = 0.0
        grad = np.zeros(k)
        hess = np.zeros((k, k))
        for m, logc, e in self.p_terms:
            a = logc + e @ v
            w = softmax(a)
            g = w @ e
            val += m * logsumexp(a)
            grad += m * g
            hess += m * ((e.T * w) @ e - np.outer(g, g))
        return val, grad, hess

    def residual(self, x, omega):
        k = self.k
        y, v = self.split(x)
        _, gq, hq = self.q_parts(y)
        _, gp, hp = self.p_parts(v)
        wq, bq, bp = gq[0], gq[1:], gp
        gap = self.mu - bp
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.concatenate(
                (
                    [math.log(wq) - math.log(omega) if wq > 0 else -np.inf],
                    np.log(bq) - np.log(bp),
                    np.log(bp) - np.log(gap) - y[1:] - v,
                )
            )
        n = 1 + 2 * k
        jac = np.zeros((n, n))
        jac[0, : 1 + k] = hq[0] / wq
        jac[1 : 1 + k, : 1 + k] = hq[1:] / bq[:, None]
        jac[1 : 1 + k, 1 + k :] = -hp / bp[:, None]
        jac[1 + k :, 1 : 1 + k] = -np.eye(k)
        jac[1 + k :, 1 + k :] = hp * (1.0 / bp + 1.0 / gap)[:, None] - np.eye(k)
        return f, jac, bp

    def start(self) -> np.ndarray:
        return np.zeros(1 + 2 * self.k)


# --- closed-form evaluation ---------------------------------------------------


def _log_q(spec, t, s):
    out = 0.0
    for term in spec.var_terms:
        mono = (t if term.transmitted else 1.0) * float(np.prod(s ** np.array(term.d)))
        out += float(term.coeff) * math.log1p(mono)
    return out


def _log_p(spec, u):
    out = 0.0
    for term in spec.chk_terms:
        d = np.array(term.d)
        val = 0.5 * (np.prod((1.0 + u) ** d) + np.prod((1.0 - u) ** d))
        out += float(term.coeff) * math.log(val)
    return out


def _check_point(spec, omega, t, s, u, beta):
    k = spec.k
    s = np.asarray(s, dtype=float).reshape(k)
    u = np.asarray(u, dtype=float).reshape(k)
    beta = np.asarray(beta, dtype=float).reshape(k)
    mu = np.array([float(x) for x in edge_fractions(spec)])
    if not (t > 0 and np.all(s > 0) and np.all(u > 0)):
        raise DomainError("t, s and u must be positive")
    if not np.all((beta > 0) & (beta < mu)):
        raise DomainError("beta_i must lie strictly between 0 and mu_i(1)")
    if not 0 < omega < 1:
        raise DomainError("omega must lie in (0, 1)")
    return s, u, beta, mu


def objective(spec: EnsembleSpec, omega: float, t: float, s, u, beta) -> float:
    """gamma at (t, s, u, beta) in nats."""
    s, u, beta, mu = _check_point(spec, omega, t, s, u, beta)
    return (
        _log_q(spec, t, s)
        + _log_p(spec, u)
        - float(beta @ np.log(u))
        - float(beta @ np.log(s))
        - omega * math.log(t)
        - float(mu @ binary_entropy(beta / mu))
    )


def stationary_residuals(spec: EnsembleSpec, omega: float, t: float, s, u, beta) -> np.ndarray:
    """Absolute violations of the four stationary conditions, evaluated directly.

    Returns ``[r_omega, r_u..., r_s..., r_beta...]``.
    """
    s, u, beta, mu = _check_point(spec, omega, t, s, u, beta)
    k = spec.k
    w_q = 0.0
    b_q = np.zeros(k)
    for term in spec.var_terms:
        d = np.array(term.d)
        mono = (t if term.transmitted else 1.0) * float(np.prod(s**d))
        frac = float(term.coeff) * mono / (1.0 + mono)
        if term.transmitted:
            w_q += frac
        b_q += d * frac
    b_p = np.zeros(k)
    for term in spec.chk_terms:
        d = np.array(term.d)
        den = np.prod((1.0 + u) ** d) + np.prod((1.0 - u) ** d)
        for i in range(k):
            if d[i]:
                e = d.copy()
                e[i] -= 1
                num = np.prod((1.0 + u) ** e) - np.prod((1.0 - u) ** e)
                b_p[i] += float(term.coeff) * d[i] * u[i] * num / den
    return np.concatenate(
        (
            [abs(omega - w_q)],
            np.abs(beta - b_p),
            np.abs(beta - b_q),
            np.abs(beta / (mu - beta) - u * s),
        )
    )


# --- Newton solver ------------------------------------------------------------


def _merit(f):
    return 0.5 * float(f @ f) if np.all(np.isfinite(f)) else np.inf


def _newton(model: _Model, omega: float, x0: np.ndarray, tol: float, max_iter: int = MAX_NEWTON):
    """Damped Newton on the log-variable system; returns (x, iterations) or raises."""
    x = np.array(x0, dtype=float)
    f, jac, _ = model.residual(x, omega)
    phi = _merit(f)
    if not np.isfinite(phi):
        raise ConvergenceError("initial point is outside the domain", best_residual=np.inf)
    best = float(np.abs(f).max())
    for it in range(1, max_iter + 1):
        if np.abs(f).max() <= tol * 1e-2:
            return x, it - 1
        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(jac, -f, rcond=None)[0]
        if not np.all(np.isfinite(dx)):
            dx = np.linalg.lstsq(jac, -f, rcond=None)[0]
        big = np.abs(dx).max()
        if big > MAX_LOG_STEP:
            dx *= MAX_LOG_STEP / big
        alpha = 1.0
        while alpha > 1e-10:
            xn = x + alpha * dx
            fn, jn, _ = model.residual(xn, omega)
            pn = _merit(fn)
            if pn <= (1.0 - 1e-4 * alpha) * phi or (pn < phi and alpha < 1e-3):
                break
            alpha *= 0.5
        else:
            break
        x, f, jac, phi = xn, fn, jn, pn
        best = min(best, float(np.abs(f).max()))
        if alpha == 1.0 and np.abs(dx).max() < 1e-15:
            break
    if np.abs(f).max() <= tol:
        return x, max_iter
    raise ConvergenceError(f"Newton stalled at omega={omega:.6g}", best_residual=best)


def _logit(w):
    return math.log(w) - math.log1p(-w)


def _march(model: _Model, omega: float, x0: np.ndarray, omega0: float, tol: float) -> Tuple[np.ndarray, int]:
    """Continuation in logit(omega) from a solved point (x0, omega0)."""
    xi_target = _logit(omega)
    xi = _logit(omega0)
    x = x0
    x_prev, xi_prev = None, None
    h = 0.5
    total = 0
    while abs(xi_target - xi) > 0:
        step = math.copysign(min(h, abs(xi_target - xi)), xi_target - xi)
        xi_new = xi + step
        guess = x if x_prev is None else x + (x - x_prev) * (step / (xi - xi_prev))
        try:
            xn, its = _newton(model, expit(xi_new), guess, tol)
        except ConvergenceError:
            h *= 0.25
            if h < 1e-6:
                raise
            continue
        total += its
        x_prev, xi_prev = x, xi
        x, xi = xn, xi_new
        if its <= 5:
            h = min(2.0 * h, 2.0)
    return x, total


def _make_point(spec, model, omega, x, branch, its) -> StationaryPoint:
    k = model.k
    y, v = model.split(x)
    _, _, bp = model.residual(x, omega)
    t = math.exp(y[0])
    s = np.exp(y[1:])
    u = np.exp(v)
    beta = np.clip(bp, BETA_BARRIER, model.mu - BETA_BARRIER)
    res = float(stationary_residuals(spec, omega, t, s, u, beta).max())
    gamma = objective(spec, omega, t, s, u, beta)
    return StationaryPoint(omega, t, s, u, beta, gamma, res, branch, its)


def _check_omega(model: _Model, omega: float) -> float:
    omega = float(omega)
    if not 0 < omega < model.omega_max - 1e-12:
        raise DomainError(f"omega must lie in (0, {model.omega_max:.12g}), the range of achievable normalised weights")
    if omega >= 1:
        raise DomainError("omega must be below 1")
    return omega


def _midpoint(model: _Model, tol: float) -> Tuple[np.ndarray, float]:
    """A solved point near omega = 1/2 to start continuation from."""
    x0 = model.start()
    w0 = float(model.q_parts(x0[: 1 + model.k])[1][0])
    w0 = min(max(w0, 1e-3), 1 - 1e-3)
    x, _ = _newton(model, w0, x0, tol)
    return x, w0


def solve_stationary(
    spec: EnsembleSpec,
    omega: float,
    init: Optional[object] = None,
    tol: float = TOL,
    *,
    _model: Optional[_Model] = None,
) -> StationaryPoint:
    """Stationary point of the growth-rate objective at ``omega``.

    ``init`` may be a :class:`StationaryPoint` or a log-variable vector
    ``(log t, log s, log u)``; without it the solution is continued from
    omega = 1/2.
    """
    model = _model or _Model(spec)
    omega = _check_omega(model, omega)
    if init is not None:
        x0 = init.log_vector if isinstance(init, StationaryPoint) else np.asarray(init, dtype=float)
        try:
            x, its = _newton(model, omega, x0, tol)
            return _make_point(spec, model, omega, x, "seeded", its)
        except ConvergenceError:
            if not isinstance(init, StationaryPoint):
                raise
            x, its = _march(model, omega, init.log_vector, init.omega, tol)
            return _make_point(spec, model, omega, x, "seeded", its)
    xm, wm = _midpoint(model, tol)
    x, its = _march(model, omega, xm, wm, tol)
    return _make_point(spec, model, omega, x, "midpoint", its)


def _small_weight_seed(spec: EnsembleSpec, model: _Model, omega: float) -> Optional[np.ndarray]:
    """Linearised start point: t = 1/radius, u along the Perron vector, s = P u."""
    from .smallweight import perron, build_matrices

    if not spec.unpunctured:
        return None
    mats = build_matrices(spec)
    res = perron(mats.product())
    if res.radius <= 0:
        return None
    vec = np.maximum(np.abs(res.vector), 1e-6)
    pv = np.maximum(np.asarray(mats.p_mat, dtype=float) @ vec, 1e-6)
    tau = -math.log(res.radius)
    lo, hi = -60.0, 5.0
    for _ in range(80):
        c = 0.5 * (lo + hi)
        y = np.concatenate(([tau], c + np.log(pv)))
        if model.q_parts(y)[1][0] < omega:
            lo = c
        else:
            hi = c
    c = 0.5 * (lo + hi)
    return np.concatenate(([tau], c + np.log(pv), c + np.log(vec)))


def _chain(spec, model, omegas, tol, label) -> Dict[float, StationaryPoint]:
    out: Dict[float, StationaryPoint] = {}
    prev_x = prev_w = None
    for w in omegas:
        try:
            if prev_x is None:
                xm, wm = _midpoint(model, tol)
                x, its = _march(model, w, xm, wm, tol)
            else:
                x, its = _march(model, w, prev_x, prev_w, tol)
        except ConvergenceError:
            continue
        out[w] = _make_point(spec, model, w, x, label, its)
        prev_x, prev_w = x, w
    return out


def growth_curve(spec: EnsembleSpec, omega_grid: Sequence[float], tol: float = TOL) -> GrowthCurve:
    """gamma over a grid, maximised over the stationary branches that were found.

    Branches come from an ascending and a descending continuation chain and,
    for small omega on un-punctured ensembles, a linearised small-weight seed.
    """
    model = _Model(spec)
    grid = sorted({_check_omega(model, w) for w in omega_grid})
    cands: Dict[float, List[StationaryPoint]] = {w: [] for w in grid}
    for label, order in (("ascending", grid), ("descending", grid[::-1])):
        for w, p in _chain(spec, model, order, tol, label).items():
            cands[w].append(p)
    for w in grid:
        if w > 0.05:
            continue
        seed = None
        try:
            seed = _small_weight_seed(spec, model, w)
        except Exception:
            seed = None
        if seed is None:
            continue
        try:
            x, its = _newton(model, w, seed, tol)
        except ConvergenceError:
            continue
        cands[w].append(_make_point(spec, model, w, x, "small-weight", its))
    points = []
    failures = []
    counts = {}
    for w in grid:
        ok = [p for p in cands[w] if p.residuals <= tol and math.isfinite(p.gamma)]
        if not ok:
            failures.append((w, "no stationary point found"))
            continue
        distinct: List[StationaryPoint] = []
        for p in ok:
            if not any(np.allclose(p.log_vector, q.log_vector, atol=1e-6) for q in distinct):
                distinct.append(p)
        best = max(distinct, key=lambda p: p.gamma)
        counts[w] = len(distinct)
        points.append(best)
    return GrowthCurve(points, failures, counts)


def derivative_check(point: StationaryPoint, spec: EnsembleSpec, h_step: float) -> Tuple[float, float]:
    """(central difference of gamma at point.omega, -ln t); equal up to O(h^2)."""
    if not h_step > 0:
        raise DomainError("h_step must be positive")
    w = point.omega
    if w - h_step <= 0 or w + h_step >= 1 or h_step < 1e-12:
        raise DomainError("step underflow or leaves (0, 1)")
    model = _Model(spec)
    lo = solve_stationary(spec, w - h_step, point, _model=model)
    hi = solve_stationary(spec, w + h_step, point, _model=model)
    return (hi.gamma - lo.gamma) / (2.0 * h_step), point.minus_log_t
