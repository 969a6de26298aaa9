"""Exact finite-length average weight distribution of an MET ensemble.

A(l) is assembled per active-edge vector e as

    coef(Q^n, t^l s^e) * coef(P^n, u^e) / prod_i binom(E_i, e_i)

where Q^n = prod (1 + t^{b1} s^d)^{n nu_{b,d}} only involves (t, s) and
P^n = prod f_d(u)^{n mu_d} only involves u, so the two tables are built
independently. The Q side is sparse and handled with :mod:`.polynomial`. The
P side is a dense box truncated at the largest e the Q side can reach, split
into independent blocks of edge types, and evaluated by the modular kernels
in :mod:`._kernels` with CRT reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .ensemble import EnsembleSpec, InstantiatedCounts, instantiate
from .errors import DomainError, ResourceLimitError
from .polynomial import DegreeCap, SparsePoly, poly_mul, poly_pow

DEFAULT_TERM_BUDGET = 20_000_000

CSV_HEADER = ["ell", "A_exact_num", "A_exact_den", "A_float", "log_A_over_n"]


def check_constellation_poly(d: Sequence[int]) -> SparsePoly:
    """f_d(u) = ((1+u)^d + (1-u)^d) / 2: even-parity active-edge patterns of a check."""
    k = len(d)
    one = SparsePoly.constant(k, 1)
    plus, minus = one, one
    for i, di in enumerate(d):
        x = SparsePoly.variable(k, i)
        plus = plus * (one + x) ** di
        minus = minus * (one - x) ** di
    return (plus + minus).scale(Fraction(1, 2))


@dataclass
class ConstellationTables:
    """Coefficient tables of Q^n and P^n truncated to what A(0..ell_max) needs."""

    n: int
    ell_max: int
    edge_counts: Tuple[int, ...]
    q_table: Dict[int, Dict[Tuple[int, ...], int]]
    p_blocks: List[Tuple[Tuple[int, ...], np.ndarray]]
    p_caps: Tuple[int, ...]

    def p_coef(self, e: Sequence[int]) -> int:
        out = 1
        for types, arr in self.p_blocks:
            idx = tuple(e[i] for i in types)
            if any(x >= s for x, s in zip(idx, arr.shape)):
                raise IndexError(f"e={tuple(e)} outside the computed P box")
            out *= arr[idx]
            if not out:
                return 0
        return int(out)

    @property
    def p_table(self) -> Dict[Tuple[int, ...], int]:
        """Dense P^n table as a dict over the truncated box (nonzero entries only)."""
        out = {}
        for e in np.ndindex(*(c + 1 for c in self.p_caps)):
            v = self.p_coef(e)
            if v:
                out[tuple(int(x) for x in e)] = v
        return out


def _edge_blocks(spec: EnsembleSpec) -> List[Tuple[int, ...]]:
    parent = list(range(spec.k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for t in spec.chk_terms:
        types = [i for i, x in enumerate(t.d) if x]
        for i in types[1:]:
            parent[find(i)] = find(types[0])
    groups: Dict[int, List[int]] = {}
    for i in range(spec.k):
        groups.setdefault(find(i), []).append(i)
    return [tuple(g) for g in sorted(groups.values())]


def _q_power(counts: InstantiatedCounts, ell_max: int, budget: int) -> SparsePoly:
    spec = counts.spec
    k = spec.k
    cap = DegreeCap((ell_max,) + counts.edge_counts)
    q = SparsePoly.constant(1 + k, 1)
    for term, nvar in zip(spec.var_terms, counts.var_counts):
        base = SparsePoly(1 + k, {(0,) * (1 + k): 1, (term.channel[1],) + term.d: 1})
        q = poly_mul(q, poly_pow(base, nvar, cap), cap)
        if len(q) > budget:
            raise ResourceLimitError(f"Q table exceeds the term budget ({len(q)} > {budget})")
    return q


def _p_block(counts: InstantiatedCounts, types: Tuple[int, ...], caps: Sequence[int], method: str):
    spec = counts.spec
    shape = tuple(caps[i] + 1 for i in types)
    factors = []
    bits = 1
    for term, m in zip(spec.chk_terms, counts.chk_counts):
        if not any(term.d[i] for i in types) or m == 0:
            continue
        sub = tuple(term.d[i] for i in types)
        f = check_constellation_poly(sub)
        factors.append(([(e, int(c)) for e, c in f], m))
        bits += m * (sum(sub) - 1)
    if method == "sparse":
        cap = DegreeCap(tuple(s - 1 for s in shape))
        poly = SparsePoly.constant(len(types), 1)
        for terms, m in factors:
            poly = poly_mul(poly, poly_pow(SparsePoly(len(types), dict(terms)), m, cap), cap)
        arr = np.zeros(shape, dtype=object)
        for e, c in poly:
            arr[e] = int(c)
        return arr
    return _kernels.exact_power_product(shape, factors, bits)


def build_tables(
    counts: InstantiatedCounts,
    ell_max: Optional[int] = None,
    *,
    budget: int = DEFAULT_TERM_BUDGET,
    method: str = "dense",
) -> ConstellationTables:
    """Constellation tables for A(0..ell_max).

    ``method="dense"`` uses the accelerated modular kernels for P^n,
    ``method="sparse"`` the exact sparse-polynomial path (slow, for checking).
    """
    n = counts.n
    if ell_max is None:
        ell_max = n
    if not 0 <= ell_max <= n:
        raise DomainError(f"ell_max must lie in [0, {n}]")
    if method not in ("dense", "sparse"):
        raise ValueError("method must be 'dense' or 'sparse'")
    spec = counts.spec
    q = _q_power(counts, ell_max, budget)
    q_table: Dict[int, Dict[Tuple[int, ...], int]] = {ell: {} for ell in range(ell_max + 1)}
    caps = [0] * spec.k
    for exps, c in q:
        q_table[exps[0]][exps[1:]] = int(c)
        for i in range(spec.k):
            caps[i] = max(caps[i], exps[1 + i])
    blocks = []
    for types in _edge_blocks(spec):
        size = math.prod(caps[i] + 1 for i in types)
        if size > budget:
            raise ResourceLimitError(f"P table block of {size} entries exceeds the term budget ({budget})")
        blocks.append((types, _p_block(counts, types, caps, method)))
    return ConstellationTables(n, ell_max, counts.edge_counts, q_table, blocks, tuple(caps))


@lru_cache(maxsize=256)
def _binomial_row(total: int) -> Tuple[int, ...]:
    return tuple(math.comb(total, e) for e in range(total + 1))


@dataclass
class WeightSpectrum:
    n: int
    ell_max: int
    values: List[Fraction]
    e_terms: List[int] = field(default_factory=list)

    def as_floats(self) -> List[float]:
        return [float(v) for v in self.values]

    def log_over_n(self) -> List[float]:
        return [_log_fraction(v) / self.n for v in self.values]

    def rows(self) -> List[list]:
        out = []
        for ell, v in enumerate(self.values):
            out.append([ell, v.numerator, v.denominator, float(v), _log_fraction(v) / self.n])
        return out


def _log_fraction(v: Fraction) -> float:
    if v <= 0:
        return float("-inf")
    return math.log(v.numerator) - math.log(v.denominator)


def combine_tables(tables: ConstellationTables) -> WeightSpectrum:
    rows = [_binomial_row(E) for E in tables.edge_counts]
    values = []
    e_terms = []
    for ell in range(tables.ell_max + 1):
        acc = Fraction(0)
        used = 0
        for e, qc in tables.q_table[ell].items():
            pc = tables.p_coef(e)
            if not pc:
                continue
            den = 1
            for row, ei in zip(rows, e):
                den *= row[ei]
            acc += Fraction(qc * pc, den)
            used += 1
        values.append(acc)
        e_terms.append(used)
    return WeightSpectrum(tables.n, tables.ell_max, values, e_terms)


def average_weight_distribution(
    counts: InstantiatedCounts,
    ell_max: Optional[int] = None,
    *,
    budget: int = DEFAULT_TERM_BUDGET,
    method: str = "dense",
) -> WeightSpectrum:
    """Exact A(l) for l = 0..ell_max as Fractions."""
    return combine_tables(build_tables(counts, ell_max, budget=budget, method=method))


def normalized_log_spectrum(spec: EnsembleSpec, n_list: Sequence[int], omega) -> List[Tuple[int, float]]:
    """(n, ln A(round(omega n)) / n) for each n; rounding is half-up."""
    omega = Fraction(omega)
    out = []
    for n in n_list:
        counts = instantiate(spec, n)
        ell = math.floor(omega * n + Fraction(1, 2))
        ws = average_weight_distribution(counts, ell)
        out.append((n, _log_fraction(ws.values[ell]) / n))
    return out
