"""Hot loops: modular polynomial powers and GF(2) codeword counting.

Every kernel exists twice: an ``@njit`` version and a vectorised numpy
version with identical results. The active one is chosen at import from the
``METLDPC_DISABLE_NUMBA`` environment variable (or numba being absent) and can
be switched at runtime with :func:`set_backend`.

Graph conventions
-----------------
Variable columns are int64 bit masks over check nodes, so at most 63 checks
are supported. A graph is given by one permutation per edge type mapping the
variable-side slot to the check-side slot; permutations of all types are
concatenated into one row of length ``sum(E_i)`` holding type-local indices.
"""

from __future__ import annotations

import itertools
import math
import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is too old; skip the probe and its warning
        numba.config.THREADING_LAYER = "omp"
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap

    prange = range

MAX_CHECKS = 63

_DISABLED = os.environ.get("METLDPC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
_backend = "numba" if HAVE_NUMBA and not _DISABLED else "numpy"


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError("backend must be 'numba' or 'numpy'")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


def set_threads(n: int) -> None:
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# modular truncated power products
# ---------------------------------------------------------------------------


@njit(cache=True)
def _power_product_mod_nb(shape, exps, coefs, factor_ptr, counts, p):
    k = shape.shape[0]
    size = 1
    for d in range(k):
        size *= shape[d]
    strides = np.empty(k, np.int64)
    acc = 1
    for d in range(k - 1, -1, -1):
        strides[d] = acc
        acc *= shape[d]
    coords = np.empty((size, k), np.int64)
    for idx in range(size):
        rem = idx
        for d in range(k):
            coords[idx, d] = rem // strides[d]
            rem = rem % strides[d]
    n_terms = exps.shape[0]
    offsets = np.zeros(n_terms, np.int64)
    for t in range(n_terms):
        for d in range(k):
            offsets[t] += exps[t, d] * strides[d]
    g = np.zeros(size, np.int64)
    g[0] = 1
    reach = np.zeros(k, np.int64)
    for f in range(factor_ptr.shape[0] - 1):
        lo = factor_ptr[f]
        hi = factor_ptr[f + 1]
        for _ in range(counts[f]):
            new = np.zeros(size, np.int64)
            for idx in range(size):
                v = g[idx]
                if v == 0:
                    continue
                for t in range(lo, hi):
                    ok = True
                    for d in range(k):
                        if coords[idx, d] + exps[t, d] >= shape[d]:
                            ok = False
                            break
                    if ok:
                        j = idx + offsets[t]
                        new[j] = (new[j] + v * coefs[t]) % p
            g = new
    return g


def _power_product_mod_np(shape, exps, coefs, factor_ptr, counts, p):
    shape = tuple(int(s) for s in shape)
    g = np.zeros(shape, np.int64)
    g[(0,) * len(shape)] = 1
    for f in range(len(factor_ptr) - 1):
        terms = []
        for t in range(factor_ptr[f], factor_ptr[f + 1]):
            e = tuple(int(x) for x in exps[t])
            if all(x < s for x, s in zip(e, shape)):
                dst = tuple(slice(x, None) for x in e)
                src = tuple(slice(0, s - x) for x, s in zip(e, shape))
                terms.append((dst, src, int(coefs[t])))
        for _ in range(int(counts[f])):
            new = np.zeros(shape, np.int64)
            for dst, src, c in terms:
                new[dst] = (new[dst] + g[src] * c) % p
            g = new
    return g.reshape(-1)


def power_product_mod(shape, exps, coefs, factor_ptr, counts, p):
    """Flat (C-order) coefficient array of prod_f poly_f**counts[f] mod ``p``,
    truncated to the box ``shape``. ``p`` must be below 2**31."""
    args = (
        np.ascontiguousarray(shape, np.int64),
        np.ascontiguousarray(exps, np.int64).reshape(-1, len(shape)),
        np.ascontiguousarray(coefs, np.int64),
        np.ascontiguousarray(factor_ptr, np.int64),
        np.ascontiguousarray(counts, np.int64),
        np.int64(p),
    )
    if _backend == "numba":
        return _power_product_mod_nb(*args)
    return _power_product_mod_np(*args)


def primes_below(limit: int, count: int) -> list:
    """The ``count`` largest primes below ``limit`` (trial division)."""
    out = []
    c = limit - 1
    while len(out) < count and c > 2:
        if c % 2 and all(c % q for q in range(3, math.isqrt(c) + 1, 2)):
            out.append(c)
        c -= 1
    return out


_PRIMES = primes_below(2**31, 64)


def crt_reconstruct(residues, primes):
    """Combine per-prime residue arrays into an object array of Python ints.

    Garner's mixed-radix digits are computed in int64, the final Horner
    combination with exact integers. Values are assumed to lie in
    ``[0, prod(primes))``.
    """
    m = len(primes)
    digits = [np.asarray(residues[0], np.int64) % primes[0]]
    for j in range(1, m):
        pj = primes[j]
        v = np.asarray(residues[j], np.int64) % pj
        acc = np.zeros_like(v)
        radix = 1
        for i in range(j):
            acc = (acc + digits[i] * (radix % pj)) % pj
            radix *= primes[i]
        inv = pow(radix % pj, -1, pj)
        digits.append(((v - acc) % pj) * inv % pj)
    out = digits[-1].astype(object)
    for j in range(m - 2, -1, -1):
        out = digits[j].astype(object) + primes[j] * out
    return out


def exact_power_product(shape, factors, bound_bits: int):
    """Exact integer coefficients of ``prod poly**count`` truncated to ``shape``.

    ``factors`` is a list of ``(terms, count)`` where ``terms`` is a list of
    ``(exponent_tuple, non-negative int)``. ``bound_bits`` must upper-bound the
    bit length of every coefficient of the untruncated product.
    """
    k = len(shape)
    exps, raw, ptr, counts = [], [], [0], []
    for terms, count in factors:
        for e, c in terms:
            exps.append(tuple(e))
            raw.append(int(c))
        ptr.append(len(exps))
        counts.append(int(count))
    exps_arr = np.array(exps, np.int64).reshape(-1, k)
    n_primes = bound_bits // 30 + 2
    if n_primes > len(_PRIMES):
        raise OverflowError("coefficients too large for the prime table")
    primes = _PRIMES[:n_primes]
    residues = []
    for p in primes:
        coefs = np.array([c % p for c in raw], np.int64)
        residues.append(power_product_mod(shape, exps_arr, coefs, ptr, counts, p))
    return crt_reconstruct(residues, primes).reshape(tuple(shape))


# ---------------------------------------------------------------------------
# GF(2) codeword counting
# ---------------------------------------------------------------------------


@njit(cache=True)
def _build_masks(perm, var_owner, chk_owner, slot_base, n_vars):
    masks = np.zeros(n_vars, np.int64)
    one = np.int64(1)
    for s in range(perm.shape[0]):
        c = chk_owner[slot_base[s] + perm[s]]
        masks[var_owner[s]] ^= one << c
    return masks


@njit(cache=True)
def _gray_count(masks, transmitted, out):
    """Accumulate into ``out[w]`` the number of zero-syndrome maps of weight w."""
    v = masks.shape[0]
    syn = np.int64(0)
    state = np.zeros(v, np.bool_)
    w = 0
    out[0] += 1
    total = np.int64(1) << v
    for g in range(1, total):
        bit = 0
        x = g
        while (x & 1) == 0:
            x >>= 1
            bit += 1
        syn ^= masks[bit]
        state[bit] = not state[bit]
        if transmitted[bit]:
            if state[bit]:
                w += 1
            else:
                w -= 1
        if syn == 0:
            out[w] += 1


@njit(cache=True)
def _next_perm(a, lo, hi):
    """In-place lexicographic successor of a[lo:hi]; False (and reset) on wrap."""
    i = hi - 2
    while i >= lo and a[i] >= a[i + 1]:
        i -= 1
    if i < lo:
        a[lo:hi] = a[lo:hi][::-1].copy()
        return False
    j = hi - 1
    while a[j] <= a[i]:
        j -= 1
    tmp = a[i]
    a[i] = a[j]
    a[j] = tmp
    a[i + 1:hi] = a[i + 1:hi][::-1].copy()
    return True


@njit(cache=True)
def _exhaustive_maps_nb(offsets, var_owner, chk_owner, slot_base, n_vars, transmitted, n_weights):
    k = offsets.shape[0] - 1
    perm = np.empty(offsets[k], np.int64)
    for t in range(k):
        for s in range(offsets[t], offsets[t + 1]):
            perm[s] = s - offsets[t]
    totals = np.zeros(n_weights, np.int64)
    graphs = np.int64(0)
    while True:
        masks = _build_masks(perm, var_owner, chk_owner, slot_base, n_vars)
        _gray_count(masks, transmitted, totals)
        graphs += 1
        t = k - 1
        while t >= 0:
            if _next_perm(perm, offsets[t], offsets[t + 1]):
                break
            t -= 1
        if t < 0:
            break
    return totals, graphs


@njit(cache=True)
def _reduce(x, basis, n_checks):
    for bit in range(n_checks - 1, -1, -1):
        if (x >> bit) & 1 and basis[bit] != 0:
            x ^= basis[bit]
    return x


@njit(cache=True)
def _residue_count_one(masks, punct_idx, trans_idx, n_checks, max_weight, out_row):
    basis = np.zeros(n_checks, np.int64)
    kerdim = 0
    for j in range(punct_idx.shape[0]):
        x = _reduce(masks[punct_idx[j]], basis, n_checks)
        if x == 0:
            kerdim += 1
        else:
            lead = 0
            y = x
            while y > 1:
                y >>= 1
                lead += 1
            basis[lead] = x
    nt = trans_idx.shape[0]
    r = np.empty(nt, np.int64)
    for j in range(nt):
        r[j] = _reduce(masks[trans_idx[j]], basis, n_checks)
    mult = np.int64(1) << kerdim
    out_row[0] = mult
    idx = np.empty(max(max_weight, 1), np.int64)
    for w in range(1, max_weight + 1):
        if w > nt:
            break
        for i in range(w):
            idx[i] = i
        cnt = np.int64(0)
        while True:
            acc = np.int64(0)
            for i in range(w):
                acc ^= r[idx[i]]
            if acc == 0:
                cnt += 1
            i = w - 1
            while i >= 0 and idx[i] == nt - w + i:
                i -= 1
            if i < 0:
                break
            idx[i] += 1
            for m in range(i + 1, w):
                idx[m] = idx[m - 1] + 1
        out_row[w] = cnt * mult


@njit(cache=True, parallel=True)
def _batch_residue_nb(perms, var_owner, chk_owner, slot_base, n_vars, punct_idx, trans_idx, n_checks, max_weight):
    b = perms.shape[0]
    out = np.zeros((b, max_weight + 1), np.int64)
    for g in prange(b):
        masks = _build_masks(perms[g], var_owner, chk_owner, slot_base, n_vars)
        _residue_count_one(masks, punct_idx, trans_idx, n_checks, max_weight, out[g])
    return out


@njit(cache=True, parallel=True)
def _batch_maps_nb(perms, var_owner, chk_owner, slot_base, n_vars, transmitted, n_weights):
    b = perms.shape[0]
    out = np.zeros((b, n_weights), np.int64)
    for g in prange(b):
        masks = _build_masks(perms[g], var_owner, chk_owner, slot_base, n_vars)
        _gray_count(masks, transmitted, out[g])
    return out


# --- numpy versions ---------------------------------------------------------


def _masks_np(perms, var_owner, chk_owner, slot_base, n_vars):
    """Column masks for a batch of graphs, shape (B, n_vars)."""
    checks = chk_owner[slot_base[None, :] + perms]
    bits = np.left_shift(np.int64(1), checks.astype(np.int64))
    masks = np.zeros((perms.shape[0], n_vars), np.int64)
    for v in range(n_vars):
        cols = np.nonzero(var_owner == v)[0]
        if cols.size:
            masks[:, v] = np.bitwise_xor.reduce(bits[:, cols], axis=1)
    return masks


def _map_table(n_vars, transmitted):
    """Weight of each of the 2**V maps, bit v of the map index is variable v."""
    idx = np.arange(1 << n_vars, dtype=np.int64)
    weights = np.zeros(idx.shape, np.int64)
    for v in range(n_vars):
        if transmitted[v]:
            weights += (idx >> v) & 1
    return weights


def _maps_counts_np(masks, transmitted, n_weights):
    """Per-graph zero-syndrome map counts by weight, shape (B, n_weights)."""
    b, v = masks.shape
    syn = np.zeros((b, 1), np.int64)
    for j in range(v):
        syn = np.concatenate([syn, syn ^ masks[:, j:j + 1]], axis=1)
    weights = _map_table(v, transmitted)
    zero = syn == 0
    out = np.zeros((b, n_weights), np.int64)
    for w in range(n_weights):
        sel = weights == w
        if sel.any():
            out[:, w] = zero[:, sel].sum(axis=1)
    return out


def _residue_counts_np(masks, punct_idx, trans_idx, n_checks, max_weight):
    b = masks.shape[0]
    basis = np.zeros((b, n_checks), np.int64)
    rows = np.arange(b)

    def reduce(x):
        x = x.copy()
        for bit in range(n_checks - 1, -1, -1):
            hit = (((x >> bit) & 1) == 1) & (basis[:, bit] != 0)
            x = np.where(hit, x ^ basis[:, bit], x)
        return x

    kerdim = np.zeros(b, np.int64)
    for j in punct_idx:
        x = reduce(masks[:, j])
        zero = x == 0
        kerdim += zero
        lead = np.full(b, -1, np.int64)
        for bit in range(n_checks):
            lead = np.where(((x >> bit) & 1) == 1, bit, lead)
        nz = ~zero
        basis[rows[nz], lead[nz]] = x[nz]
    r = np.stack([reduce(masks[:, j]) for j in trans_idx], axis=1) if len(trans_idx) else np.zeros((b, 0), np.int64)
    mult = np.left_shift(np.int64(1), kerdim)
    out = np.zeros((b, max_weight + 1), np.int64)
    out[:, 0] = mult
    nt = r.shape[1]
    for w in range(1, min(max_weight, nt) + 1):
        combos = np.array(list(itertools.combinations(range(nt), w)), np.int64)
        cnt = np.zeros(b, np.int64)
        for lo in range(0, len(combos), 2048):
            c = combos[lo:lo + 2048]
            acc = np.bitwise_xor.reduce(r[:, c], axis=2)
            cnt += (acc == 0).sum(axis=1)
        out[:, w] = cnt * mult
    return out


def _exhaustive_maps_np(offsets, var_owner, chk_owner, slot_base, n_vars, transmitted, n_weights, chunk=1 << 15):
    k = len(offsets) - 1
    per_type = []
    for t in range(k):
        e = offsets[t + 1] - offsets[t]
        perms = np.array(list(itertools.permutations(range(e))), np.int64).reshape(-1, e)
        sub_owner = var_owner[offsets[t]:offsets[t + 1]]
        sub_chk = chk_owner[offsets[t]:offsets[t + 1]]
        bits = np.left_shift(np.int64(1), sub_chk[perms])
        contrib = np.zeros((perms.shape[0], n_vars), np.int64)
        for v in range(n_vars):
            cols = np.nonzero(sub_owner == v)[0]
            if cols.size:
                contrib[:, v] = np.bitwise_xor.reduce(bits[:, cols], axis=1)
        per_type.append(contrib)
    sizes = [c.shape[0] for c in per_type]
    total = int(np.prod(sizes, dtype=object))
    totals = np.zeros(n_weights, np.int64)
    for lo in range(0, total, chunk):
        flat = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        masks = np.zeros((flat.size, n_vars), np.int64)
        rem = flat
        for t in range(k - 1, -1, -1):
            masks ^= per_type[t][rem % sizes[t]]
            rem = rem // sizes[t]
        totals += _maps_counts_np(masks, transmitted, n_weights).sum(axis=0)
    return totals, total


# --- dispatchers ------------------------------------------------------------


def exhaustive_maps(offsets, var_owner, chk_owner, slot_base, n_vars, transmitted, n_weights):
    """Sum of per-graph weight counts over every graph; returns (totals, n_graphs)."""
    if _backend == "numba":
        totals, graphs = _exhaustive_maps_nb(offsets, var_owner, chk_owner, slot_base, n_vars, transmitted, n_weights)
        return totals, int(graphs)
    return _exhaustive_maps_np(offsets, var_owner, chk_owner, slot_base, n_vars, transmitted, n_weights)


def batch_maps(perms, var_owner, chk_owner, slot_base, n_vars, transmitted, n_weights):
    perms = np.ascontiguousarray(perms, np.int64)
    if _backend == "numba":
        return _batch_maps_nb(perms, var_owner, chk_owner, slot_base, n_vars, transmitted, n_weights)
    masks = _masks_np(perms, var_owner, chk_owner, slot_base, n_vars)
    return _maps_counts_np(masks, transmitted, n_weights)


def batch_residue(perms, var_owner, chk_owner, slot_base, n_vars, punct_idx, trans_idx, n_checks, max_weight):
    perms = np.ascontiguousarray(perms, np.int64)
    if _backend == "numba":
        return _batch_residue_nb(
            perms, var_owner, chk_owner, slot_base, n_vars, punct_idx, trans_idx, n_checks, max_weight
        )
    masks = _masks_np(perms, var_owner, chk_owner, slot_base, n_vars)
    return _residue_counts_np(masks, punct_idx, trans_idx, n_checks, max_weight)
