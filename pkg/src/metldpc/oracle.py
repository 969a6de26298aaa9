"""Brute-force ground truth for the weight distribution.

Graphs of an instantiated ensemble are one permutation per edge type (socket
model). A map x is a codeword when every check sees an even number of active
edges, counted with multiplicity, so a double edge cancels. Weight counts
transmitted variables only.

Three independent ways to count the codewords of one graph:

* ``maps``      all 2^V assignments, Gray-code order (V <= 24)
* ``nullspace`` GF(2) null-space basis of H, all 2^dim combinations
* ``residue``   punctured columns eliminated first; transmitted subsets of
                size <= w whose residues XOR to zero, times 2^dim ker H_p
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .ensemble import InstantiatedCounts, ensemble_size
from .errors import DomainError, ResourceLimitError

DEFAULT_GRAPH_BUDGET = 10_000_000
DEFAULT_SAMPLES = 100_000
SAMPLE_CHUNK = 4096
MAX_MAP_VARS = 24

CSV_HEADER = ["ell", "oracle_value", "oracle_stderr", "formula_value", "abs_diff"]


@dataclass(frozen=True)
class _Layout:
    n_vars: int
    n_checks: int
    transmitted: np.ndarray  # bool per variable
    offsets: np.ndarray  # slot offsets per edge type, length k+1
    var_owner: np.ndarray  # variable index of every variable-side slot
    chk_owner: np.ndarray  # check index of every check-side slot
    slot_base: np.ndarray  # offsets[type(slot)] for every slot

    @property
    def punct_idx(self) -> np.ndarray:
        return np.nonzero(~self.transmitted)[0].astype(np.int64)

    @property
    def trans_idx(self) -> np.ndarray:
        return np.nonzero(self.transmitted)[0].astype(np.int64)


def layout(counts: InstantiatedCounts) -> _Layout:
    spec = counts.spec
    var_d, transmitted = [], []
    for term, c in zip(spec.var_terms, counts.var_counts):
        var_d += [term.d] * c
        transmitted += [term.transmitted] * c
    chk_d = []
    for term, c in zip(spec.chk_terms, counts.chk_counts):
        chk_d += [term.d] * c
    var_owner, chk_owner, slot_base, offsets = [], [], [], [0]
    for i in range(spec.k):
        for v, d in enumerate(var_d):
            var_owner += [v] * d[i]
        for c, d in enumerate(chk_d):
            chk_owner += [c] * d[i]
        slot_base += [offsets[-1]] * counts.edge_counts[i]
        offsets.append(offsets[-1] + counts.edge_counts[i])
    return _Layout(
        n_vars=len(var_d),
        n_checks=len(chk_d),
        transmitted=np.array(transmitted, np.bool_),
        offsets=np.array(offsets, np.int64),
        var_owner=np.array(var_owner, np.int64),
        chk_owner=np.array(chk_owner, np.int64),
        slot_base=np.array(slot_base, np.int64),
    )


@dataclass(frozen=True)
class TannerGraph:
    """One socket permutation per edge type (variable slot -> check slot)."""

    perms: Tuple[np.ndarray, ...]

    def flat(self) -> np.ndarray:
        return np.concatenate(self.perms).astype(np.int64)


def incidence(g: TannerGraph, counts: InstantiatedCounts) -> np.ndarray:
    """Edge multiplicities, shape (n_checks, n_vars)."""
    lay = layout(counts)
    _check_perms(g, counts)
    m = np.zeros((lay.n_checks, lay.n_vars), np.int64)
    perm = g.flat()
    for s in range(perm.size):
        m[lay.chk_owner[lay.slot_base[s] + perm[s]], lay.var_owner[s]] += 1
    return m


def parity_check_matrix(g: TannerGraph, counts: InstantiatedCounts) -> np.ndarray:
    return (incidence(g, counts) % 2).astype(np.uint8)


def _check_perms(g: TannerGraph, counts: InstantiatedCounts) -> None:
    if len(g.perms) != counts.spec.k:
        raise DomainError("graph has the wrong number of edge types")
    for p, e in zip(g.perms, counts.edge_counts):
        if sorted(p.tolist()) != list(range(e)):
            raise DomainError("edge permutation is not a bijection on its sockets")


def enumerate_graphs(counts: InstantiatedCounts, budget: int = DEFAULT_GRAPH_BUDGET) -> Iterator[TannerGraph]:
    """Every graph once; lexicographic per type, the last edge type varying fastest."""
    size = ensemble_size(counts)
    if size > budget:
        raise ResourceLimitError(f"ensemble has {size} graphs, budget is {budget}")
    per_type = [itertools.permutations(range(e)) for e in counts.edge_counts]
    for combo in itertools.product(*[list(p) for p in per_type]):
        yield TannerGraph(tuple(np.array(p, np.int64) for p in combo))


def _generator(seed: int, stream: Optional[int] = None) -> np.random.Generator:
    key = () if stream is None else (stream,)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def sample_graph(counts: InstantiatedCounts, rng_seed: int) -> TannerGraph:
    """Uniform graph: an independent Fisher-Yates shuffle per edge type."""
    rng = _generator(rng_seed)
    return TannerGraph(tuple(rng.permutation(e).astype(np.int64) for e in counts.edge_counts))


def _sample_batch(counts: InstantiatedCounts, seed: int, chunk: int, size: int) -> np.ndarray:
    rng = _generator(seed, chunk)
    blocks = [rng.permuted(np.tile(np.arange(e, dtype=np.int64), (size, 1)), axis=1) for e in counts.edge_counts]
    return np.concatenate(blocks, axis=1)


# --- per-graph counting -----------------------------------------------------


def _count_nullspace(h: np.ndarray, transmitted: np.ndarray, n: int) -> np.ndarray:
    n_checks, n_vars = h.shape
    rows = [sum(1 << int(v) for v in np.nonzero(h[r])[0]) for r in range(n_checks)]
    pivots = []
    r = 0
    for col in range(n_vars):
        bit = 1 << col
        piv = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
    free = [c for c in range(n_vars) if c not in pivots]
    if len(free) > MAX_MAP_VARS:
        raise ResourceLimitError(f"null space dimension {len(free)} exceeds {MAX_MAP_VARS}")
    basis = []
    for f in free:
        vec = 1 << f
        for i, pc in enumerate(pivots):
            if rows[i] >> f & 1:
                vec |= 1 << pc
        basis.append(vec)
    tmask = sum(1 << v for v in range(n_vars) if transmitted[v])
    out = np.zeros(n + 1, np.int64)
    x = 0
    out[0] += 1
    for g in range(1, 1 << len(basis)):
        x ^= basis[(g & -g).bit_length() - 1]
        out[bin(x & tmask).count("1")] += 1
    return out


def codeword_count(
    g: TannerGraph,
    counts: InstantiatedCounts,
    method: str = "maps",
    max_weight: Optional[int] = None,
) -> np.ndarray:
    """A_G(l) for one graph, l = 0..n (or 0..max_weight for ``residue``)."""
    lay = layout(counts)
    _check_perms(g, counts)
    if lay.n_checks > _kernels.MAX_CHECKS:
        raise ResourceLimitError(f"{lay.n_checks} checks exceed the {_kernels.MAX_CHECKS}-bit mask limit")
    n = counts.n
    perm = g.flat()[None, :]
    if method == "maps":
        if lay.n_vars > MAX_MAP_VARS:
            raise ResourceLimitError(f"{lay.n_vars} variables exceed the 2^{MAX_MAP_VARS} map limit")
        return _kernels.batch_maps(
            perm, lay.var_owner, lay.chk_owner, lay.slot_base, lay.n_vars, lay.transmitted, n + 1
        )[0]
    if method == "nullspace":
        return _count_nullspace(parity_check_matrix(g, counts), lay.transmitted, n)
    if method == "residue":
        w = n if max_weight is None else min(max_weight, n)
        _check_combos(int(lay.transmitted.sum()), w)
        return _kernels.batch_residue(
            perm, lay.var_owner, lay.chk_owner, lay.slot_base, lay.n_vars,
            lay.punct_idx, lay.trans_idx, lay.n_checks, w,
        )[0]
    raise ValueError(f"unknown method {method!r}")


def _check_combos(nt: int, w: int, limit: int = 50_000_000) -> None:
    total = sum(math.comb(nt, j) for j in range(w + 1))
    if total > limit:
        raise ResourceLimitError(f"{total} transmitted subsets of weight <= {w} exceed {limit}")


# --- ensemble averages ------------------------------------------------------


@dataclass
class OracleSpectrum:
    mode: str
    values: List  # Fraction in exhaustive mode, float in sampled mode
    stderr: List[float]
    graphs: int

    @property
    def ell_max(self) -> int:
        return len(self.values) - 1


def oracle_spectrum(
    counts: InstantiatedCounts,
    mode: str = "exhaustive",
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    max_weight: Optional[int] = None,
    budget: int = DEFAULT_GRAPH_BUDGET,
) -> OracleSpectrum:
    lay = layout(counts)
    if lay.n_checks > _kernels.MAX_CHECKS:
        raise ResourceLimitError(f"{lay.n_checks} checks exceed the {_kernels.MAX_CHECKS}-bit mask limit")
    n = counts.n
    w = n if max_weight is None else min(max_weight, n)
    if mode == "exhaustive":
        size = ensemble_size(counts)
        if size > budget:
            raise ResourceLimitError(f"ensemble has {size} graphs, budget is {budget}")
        if lay.n_vars > MAX_MAP_VARS:
            raise ResourceLimitError(f"{lay.n_vars} variables exceed the 2^{MAX_MAP_VARS} map limit")
        totals, graphs = _kernels.exhaustive_maps(
            lay.offsets, lay.var_owner, lay.chk_owner, lay.slot_base, lay.n_vars, lay.transmitted, n + 1
        )
        if graphs != size:
            raise AssertionError(f"enumerated {graphs} graphs, expected {size}")
        values = [Fraction(int(t), size) for t in totals[: w + 1]]
        return OracleSpectrum("exhaustive", values, [0.0] * (w + 1), graphs)
    if mode != "sampled":
        raise ValueError("mode must be 'exhaustive' or 'sampled'")
    if samples < 2:
        raise DomainError("sampled mode needs at least two samples")
    use_maps = lay.n_vars <= 16
    if not use_maps:
        _check_combos(int(lay.transmitted.sum()), w)
    s1 = [0] * (w + 1)
    s2 = [0] * (w + 1)
    for chunk, lo in enumerate(range(0, samples, SAMPLE_CHUNK)):
        size = min(SAMPLE_CHUNK, samples - lo)
        perms = _sample_batch(counts, seed, chunk, size)
        if use_maps:
            per = _kernels.batch_maps(
                perms, lay.var_owner, lay.chk_owner, lay.slot_base, lay.n_vars, lay.transmitted, n + 1
            )[:, : w + 1]
        else:
            per = _kernels.batch_residue(
                perms, lay.var_owner, lay.chk_owner, lay.slot_base, lay.n_vars,
                lay.punct_idx, lay.trans_idx, lay.n_checks, w,
            )
        for ell in range(w + 1):
            col = per[:, ell]
            s1[ell] += int(col.sum())
            s2[ell] += int((col.astype(object) ** 2).sum())
    means, errs = [], []
    for ell in range(w + 1):
        mean = Fraction(s1[ell], samples)
        var = (Fraction(s2[ell]) - Fraction(s1[ell]) ** 2 / samples) / (samples - 1)
        means.append(float(mean))
        errs.append(math.sqrt(float(var) / samples))
    return OracleSpectrum("sampled", means, errs, samples)


def comparison_rows(oracle: OracleSpectrum, formula: Sequence[Fraction]) -> List[list]:
    rows = []
    for ell, (ov, se) in enumerate(zip(oracle.values, oracle.stderr)):
        fv = formula[ell]
        if oracle.mode == "exhaustive":
            rows.append([ell, str(ov), 0.0, str(fv), float(abs(ov - fv))])
        else:
            rows.append([ell, ov, se, float(fv), abs(ov - float(fv))])
    return rows
