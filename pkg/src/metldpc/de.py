"""Density evolution of MET ensembles over the binary erasure channel.

The message erasure probabilities p_i (variable to check, edge type i) obey

    p' = lambda((1, eps), 1 - rho(1 - p)),   p^(0) = eps,

with lambda_i(r, x) = nu_i(r, x) / nu_i(1,1) and rho_i(x) = mu_i(x) / mu_i(1).
The fixed point p = 0 is locally stable iff the spectral radius of
Lambda(1, eps) P is below one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .ensemble import EnsembleSpec, edge_fractions
from .errors import DomainError
from .smallweight import build_matrices, spectral_radius

ZERO_THRESHOLD = 1e-12
CHANGE_THRESHOLD = 1e-15
MAX_ITERS = 100_000

CSV_HEADER = ["epsilon", "converged", "iters", "final_max_p"]


@dataclass(frozen=True)
class DEState:
    p: np.ndarray
    iteration: int = 0


@dataclass
class DEResult:
    converged_to_zero: bool
    fixed_point: DEState
    trajectory_summary: np.ndarray

    @property
    def iterations(self) -> int:
        return self.fixed_point.iteration

    @property
    def final_max_p(self) -> float:
        return float(self.fixed_point.p.max())


class _Recursion:
    """Flattened term tables for lambda_i and rho_i."""

    def __init__(self, spec: EnsembleSpec):
        k = spec.k
        frac = edge_fractions(spec)
        lam_c, lam_e, lam_t, lam_i = [], [], [], []
        rho_c, rho_e, rho_i = [], [], []
        for i in range(k):
            for t in spec.var_terms:
                if t.d[i]:
                    e = list(t.d)
                    e[i] -= 1
                    lam_c.append(float(t.coeff * t.d[i] / frac[i]))
                    lam_e.append(e)
                    lam_t.append(t.transmitted)
                    lam_i.append(i)
            for t in spec.chk_terms:
                if t.d[i]:
                    e = list(t.d)
                    e[i] -= 1
                    rho_c.append(float(t.coeff * t.d[i] / frac[i]))
                    rho_e.append(e)
                    rho_i.append(i)
        self.k = k
        self.lam_c = np.array(lam_c)
        self.lam_e = np.array(lam_e, dtype=float).reshape(-1, k)
        self.lam_t = np.array(lam_t, dtype=bool)
        self.lam_i = np.array(lam_i, dtype=np.intp)
        self.rho_c = np.array(rho_c)
        self.rho_e = np.array(rho_e, dtype=float).reshape(-1, k)
        self.rho_i = np.array(rho_i, dtype=np.intp)

    def step(self, eps: float, p: np.ndarray) -> np.ndarray:
        q = 1.0 - p
        rho = np.bincount(self.rho_i, self.rho_c * np.prod(q**self.rho_e, axis=1), minlength=self.k)
        x = 1.0 - rho
        r = np.where(self.lam_t, eps, 1.0)
        vals = self.lam_c * r * np.prod(x**self.lam_e, axis=1)
        return np.clip(np.bincount(self.lam_i, vals, minlength=self.k), 0.0, 1.0)


def _check_eps(epsilon: float) -> float:
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise DomainError("epsilon must lie in [0, 1]")
    return eps


def initial_state(spec: EnsembleSpec, epsilon: float) -> DEState:
    return DEState(np.full(spec.k, _check_eps(epsilon)), 0)


def de_step(spec: EnsembleSpec, epsilon: float, state: DEState, _rec: Optional[_Recursion] = None) -> DEState:
    rec = _rec or _Recursion(spec)
    return DEState(rec.step(_check_eps(epsilon), np.asarray(state.p, dtype=float)), state.iteration + 1)


def de_run(
    spec: EnsembleSpec,
    epsilon: float,
    max_iters: int = MAX_ITERS,
    zero_threshold: float = ZERO_THRESHOLD,
    change_threshold: float = CHANGE_THRESHOLD,
    _rec: Optional[_Recursion] = None,
) -> DEResult:
    """Iterate until max p <= zero_threshold, the update stalls, or max_iters."""
    eps = _check_eps(epsilon)
    rec = _rec or _Recursion(spec)
    p = np.full(spec.k, eps)
    traj = [float(p.max())]
    it = 0
    while it < max_iters and traj[-1] > zero_threshold:
        new = rec.step(eps, p)
        it += 1
        change = float(np.abs(new - p).max())
        p = new
        traj.append(float(p.max()))
        if change <= change_threshold:
            break
    return DEResult(traj[-1] <= zero_threshold, DEState(p, it), np.array(traj))


@dataclass
class ThresholdResult:
    epsilon_star: float
    degenerate: bool
    evaluations: int


def threshold(
    spec: EnsembleSpec,
    tol: float = 1e-4,
    max_iters: int = MAX_ITERS,
    zero_threshold: float = ZERO_THRESHOLD,
    change_threshold: float = CHANGE_THRESHOLD,
) -> ThresholdResult:
    """Largest eps (to within tol) for which DE converges to zero, by bisection.

    Returns ``degenerate=True`` with 1.0 when even eps = 1 converges, and with
    0.0 when no eps above ``tol`` converges.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    rec = _Recursion(spec)

    def ok(eps):
        return de_run(spec, eps, max_iters, zero_threshold, change_threshold, rec).converged_to_zero

    if ok(1.0):
        return ThresholdResult(1.0, True, 1)
    if not ok(0.0):
        return ThresholdResult(0.0, True, 2)
    lo, hi = 0.0, 1.0
    evals = 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        evals += 1
        if ok(mid):
            lo = mid
        else:
            hi = mid
    # lo == 0 means no eps > tol converges: degenerate rather than a threshold
    return ThresholdResult(lo, lo == 0.0, evals)


def sweep(spec: EnsembleSpec, epsilons: Sequence[float], **kw) -> List[list]:
    rec = _Recursion(spec)
    rows = []
    for eps in epsilons:
        res = de_run(spec, eps, _rec=rec, **kw)
        rows.append([float(eps), int(res.converged_to_zero), res.iterations, res.final_max_p])
    return rows


# --- stability --------------------------------------------------------------


def stability_check(spec: EnsembleSpec, epsilon) -> Tuple[float, bool]:
    """Spectral radius of Lambda(1, eps) P and whether it is below one."""
    if isinstance(epsilon, (int, Fraction)):
        eps = Fraction(epsilon)
        if not 0 <= eps <= 1:
            raise DomainError("epsilon must lie in [0, 1]")
    else:
        eps = _check_eps(epsilon)
    radius = spectral_radius(build_matrices(spec, (1, eps)).product())
    return radius, radius < 1.0


def _linear_in_eps(spec: EnsembleSpec) -> bool:
    lam0 = build_matrices(spec, (1, 0)).lambda_mat
    return all(x == 0 for row in lam0 for x in row)


@dataclass
class StabilityComparison:
    epsilon_star: float
    epsilon_stab: float
    epsilon_stab_exact: Optional[Fraction]
    linear: bool
    degenerate: bool

    @property
    def consistent(self) -> bool:
        return self.epsilon_star <= self.epsilon_stab + 1e-4

    @property
    def unconditionally_stable(self) -> bool:
        return math.isinf(self.epsilon_stab)


def stability_threshold(spec: EnsembleSpec, tol: float = 1e-10) -> Tuple[float, Optional[Fraction], bool]:
    """Smallest eps where the radius of Lambda(1, eps) P reaches one.

    When only transmitted degree-2 nodes feed Lambda the radius is eps times
    the radius at eps = 1; otherwise it is found by bisection.
    """
    linear = _linear_in_eps(spec)
    if linear:
        mats = build_matrices(spec, (1, 1))
        if spec.k == 1:
            r1 = Fraction(mats.product_exact()[0][0])
            if r1 == 0:
                return math.inf, None, True
            return float(1 / r1), 1 / r1, True
        r1 = spectral_radius(mats.product())
        return (math.inf if r1 == 0 else 1.0 / r1), None, True
    if stability_check(spec, 1.0)[0] < 1.0:
        return math.inf, None, False
    lo, hi = 0.0, 1.0
    if stability_check(spec, 0.0)[0] >= 1.0:
        return 0.0, None, False
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stability_check(spec, mid)[0] < 1.0:
            lo = mid
        else:
            hi = mid
    return hi, None, False


def stability_vs_threshold(spec: EnsembleSpec, tol: float = 1e-4) -> StabilityComparison:
    th = threshold(spec, tol)
    stab, exact, linear = stability_threshold(spec)
    return StabilityComparison(th.epsilon_star, stab, exact, linear, th.degenerate)
