"""Small-weight behaviour of the growth rate.

Near zero normalised weight the stationary equations linearise to
``s = P u`` and ``u = t Lambda(1) s``, so ``1/t`` is the Perron root of
``Lambda(1) P`` and gamma(omega) ~ omega * ln(1/t).

    Lambda_ij(r) = d^2 nu(r, x) / dx_i dx_j at x = 0, divided by nu_i(1,1)
    P_ij         = d^2 mu(x) / dx_i dx_j at x = 1,    divided by mu_i(1)

Both matrices are built by exact symbolic differentiation; the eigenvalue
step is the only floating-point computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .ensemble import EnsembleSpec, edge_fractions
from .errors import AssumptionError, ConvergenceError, DomainError

RADIUS_TOL = 1e-12


@dataclass(frozen=True)
class SmallWeightMatrices:
    lambda_mat: Tuple[Tuple[object, ...], ...]
    p_mat: Tuple[Tuple[object, ...], ...]
    r: Tuple[object, object]

    def product(self) -> np.ndarray:
        return np.asarray(self.lambda_mat, dtype=float) @ np.asarray(self.p_mat, dtype=float)

    def product_exact(self) -> List[List[object]]:
        k = len(self.lambda_mat)
        return [
            [sum((self.lambda_mat[i][m] * self.p_mat[m][j] for m in range(k)), 0) for j in range(k)]
            for i in range(k)
        ]


def build_matrices(spec: EnsembleSpec, r: Sequence = (1, 1)) -> SmallWeightMatrices:
    """Lambda(r) and P; exact when ``r`` holds ints or Fractions."""
    k = spec.k
    r0, r1 = r
    nu = spec.nu_poly()
    mu = spec.mu_poly()
    nu_i = edge_fractions(spec)
    mu_i = nu_i  # edge balance is an ensemble invariant
    at_zero = (r0, r1) + (0,) * k
    ones = (1,) * k
    lam = []
    pm = []
    for i in range(k):
        d_nu = nu.derivative(2 + i)
        d_mu = mu.derivative(i)
        lam_row = []
        p_row = []
        for j in range(k):
            lam_row.append(d_nu.derivative(2 + j).evaluate(at_zero) / nu_i[i])
            p_row.append(Fraction(d_mu.derivative(j).evaluate(ones)) / mu_i[i])
        lam.append(tuple(lam_row))
        pm.append(tuple(p_row))
    return SmallWeightMatrices(tuple(lam), tuple(pm), (r0, r1))


@dataclass
class PerronResult:
    radius: float
    vector: np.ndarray
    converged: bool
    iterations: int
    bounds: Tuple[float, float] = (0.0, 0.0)


def _gershgorin(m: np.ndarray) -> Tuple[float, float]:
    rows = m.sum(axis=1)
    return float(max(0.0, (np.diag(m) - (rows - np.diag(m))).max())), float(rows.max())


def _block_radius(b: np.ndarray, tol: float, max_iter: int) -> Tuple[float, np.ndarray, bool, int]:
    if b.shape[0] == 1:
        return float(b[0, 0]), np.ones(1), True, 0
    shifted = b + np.eye(b.shape[0])
    v = np.ones(b.shape[0])
    lo = hi = 0.0
    for it in range(1, max_iter + 1):
        w = shifted @ v
        ratios = w / v
        lo, hi = ratios.min(), ratios.max()
        v = w / w.max()
        if hi - lo <= tol * max(1.0, hi):
            return 0.5 * (lo + hi) - 1.0, v, True, it
    return 0.5 * (lo + hi) - 1.0, v, False, max_iter


def perron(m, tol: float = RADIUS_TOL, max_iter: int = 200_000) -> PerronResult:
    """Spectral radius of a non-negative matrix, with an eigenvector.

    Strongly connected blocks are treated separately; on each block the
    shifted power iteration on ``B + I`` is primitive and converges, and the
    Collatz-Wielandt ratios bracket the root.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("matrix must be square")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise DomainError("matrix must be finite and non-negative")
    k = m.shape[0]
    n_comp, labels = connected_components(csr_matrix(m > 0), directed=True, connection="strong")
    best = (-1.0, None, True, 0, None)
    iters = 0
    converged = True
    for c in range(n_comp):
        idx = np.nonzero(labels == c)[0]
        rad, vec, ok, it = _block_radius(m[np.ix_(idx, idx)], tol, max_iter)
        iters += it
        converged &= ok
        if rad > best[0]:
            best = (rad, vec, ok, it, idx)
    radius = max(0.0, best[0])
    if n_comp == 1:
        vector = best[1]
    else:
        # eigenvector of the full reducible matrix: null vector of M - rI
        _, _, vt = np.linalg.svd(m - radius * np.eye(k))
        vector = vt[-1]
        if vector[np.argmax(np.abs(vector))] < 0:
            vector = -vector
    vector = vector / np.abs(vector).max()
    return PerronResult(radius, vector, converged, iters, _gershgorin(m))


def spectral_radius(m, tol: float = RADIUS_TOL) -> float:
    res = perron(m, tol)
    if not res.converged:
        lo, hi = res.bounds
        raise ConvergenceError(f"power iteration did not converge; Gershgorin bounds [{lo:.6g}, {hi:.6g}]")
    return res.radius


# --- report -----------------------------------------------------------------


@dataclass
class SmallWeightReport:
    spectral_radius: float
    slope: float
    exponentially_few: bool
    unpunctured: bool
    check_condition: Tuple[bool, ...]
    matrices: SmallWeightMatrices
    radius_exact: Optional[Fraction] = None
    eigenvector: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def assumptions_ok(self) -> bool:
        return self.unpunctured and all(self.check_condition)

    @property
    def verdict(self) -> str:
        if self.exponentially_few:
            return "exponentially few small-weight codewords"
        return "small-weight codewords grow exponentially"


def check_condition(spec: EnsembleSpec) -> Tuple[bool, ...]:
    """Per edge type: some check node-type has at least two edges of that type."""
    return tuple(any(t.d[i] >= 2 for t in spec.chk_terms) for i in range(spec.k))


def small_weight_report(spec: EnsembleSpec, r: Sequence = (1, 1)) -> SmallWeightReport:
    unp = spec.unpunctured
    cond = check_condition(spec)
    if not unp:
        raise AssumptionError("ensemble has punctured variable nodes; the small-weight expansion needs b=(0,1) throughout")
    bad = [i + 1 for i, ok in enumerate(cond) if not ok]
    if bad:
        raise AssumptionError(f"edge types {bad} have no check node-type with two or more edges of that type")
    mats = build_matrices(spec, r)
    res = perron(mats.product())
    if not res.converged:
        lo, hi = res.bounds
        raise ConvergenceError(f"power iteration did not converge; Gershgorin bounds [{lo:.6g}, {hi:.6g}]")
    exact = None
    if spec.k == 1 and all(isinstance(x, (int, Fraction)) for x in r):
        exact = Fraction(mats.product_exact()[0][0])
    radius = float(exact) if exact is not None else res.radius
    slope = math.log(radius) if radius > 0 else float("-inf")
    return SmallWeightReport(radius, slope, radius < 1, unp, cond, mats, exact, res.vector)


def slope_crosscheck(spec: EnsembleSpec, omega_small_list: Sequence[float]) -> List[Tuple[float, float, float]]:
    """(omega, gamma(omega)/omega, ln radius) for decreasing small omegas."""
    from .growth import growth_curve

    report = small_weight_report(spec)
    curve = growth_curve(spec, sorted(omega_small_list))
    out = []
    for p in curve.points:
        out.append((p.omega, p.gamma / p.omega, report.slope))
    return out


def report_text(rep: SmallWeightReport) -> str:
    def fmt(mat):
        return "\n".join("  " + "  ".join(str(x) for x in row) for row in mat)

    lines = [
        f"r = {rep.matrices.r}",
        "Lambda(r):",
        fmt(rep.matrices.lambda_mat),
        "P:",
        fmt(rep.matrices.p_mat),
        f"spectral_radius = {rep.spectral_radius!r}",
    ]
    if rep.radius_exact is not None:
        lines.append(f"spectral_radius_exact = {rep.radius_exact}")
    lines += [f"slope = {rep.slope!r}", f"verdict = {rep.verdict}"]
    return "\n".join(lines) + "\n"


def report_json(rep: SmallWeightReport) -> dict:
    def conv(mat):
        return [[str(Fraction(x)) if isinstance(x, (int, Fraction)) else float(x) for x in row] for row in mat]

    return {
        "r": [str(x) for x in rep.matrices.r],
        "lambda": conv(rep.matrices.lambda_mat),
        "p": conv(rep.matrices.p_mat),
        "spectral_radius": rep.spectral_radius,
        "spectral_radius_exact": None if rep.radius_exact is None else str(rep.radius_exact),
        "slope": rep.slope if math.isfinite(rep.slope) else "-inf",
        "exponentially_few": rep.exponentially_few,
        "verdict": rep.verdict,
    }
