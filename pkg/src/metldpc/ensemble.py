"""Degree-distribution pairs for multi-edge type LDPC ensembles.

An ensemble is a variable-side polynomial nu(r, x) and a check-side polynomial
mu(x). Channel types are restricted to a single channel, so each variable
term carries ``b = (b0, b1)``: ``(1, 0)`` for a punctured node, ``(0, 1)`` for a
transmitted one.

Text format (``#`` starts a comment)::

    edge_types 2
    var 1/2 b 0 1 d 2 0
    var 0.5 b 0 1 d 1 2
    chk 1/2 d 2 2
    chk 1/4 d 2 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple, Union

from .errors import EnsembleError, InstantiationError, SpecSyntaxError
from .polynomial import SparsePoly

PUNCTURED = (1, 0)
TRANSMITTED = (0, 1)

Number = Union[int, Fraction, str]


@dataclass(frozen=True)
class VarTerm:
    coeff: Fraction
    channel: Tuple[int, int]
    d: Tuple[int, ...]

    @property
    def transmitted(self) -> bool:
        return self.channel == TRANSMITTED


@dataclass(frozen=True)
class ChkTerm:
    coeff: Fraction
    d: Tuple[int, ...]


@dataclass(frozen=True)
class EnsembleSpec:
    """A validated degree distribution pair. Construction checks every invariant."""

    n_edge_types: int
    var_terms: Tuple[VarTerm, ...]
    chk_terms: Tuple[ChkTerm, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "var_terms", tuple(self.var_terms))
        object.__setattr__(self, "chk_terms", tuple(self.chk_terms))
        _validate(self)

    @property
    def k(self) -> int:
        return self.n_edge_types

    @property
    def unpunctured(self) -> bool:
        return all(t.transmitted for t in self.var_terms)

    def nu_poly(self) -> SparsePoly:
        """nu(r, x) with variable order (r0, r1, x1, ..., xk)."""
        return SparsePoly(2 + self.k, {t.channel + t.d: t.coeff for t in self.var_terms})

    def mu_poly(self) -> SparsePoly:
        return SparsePoly(self.k, {t.d: t.coeff for t in self.chk_terms})


def _validate(spec: EnsembleSpec) -> None:
    k = spec.n_edge_types
    if k < 1:
        raise EnsembleError("edge_types must be a positive integer")
    if not spec.var_terms or not spec.chk_terms:
        raise EnsembleError("an ensemble needs at least one variable and one check term")
    seen_v = set()
    for t in spec.var_terms:
        if t.channel not in (PUNCTURED, TRANSMITTED):
            raise EnsembleError(f"channel b={t.channel} must be (1,0) punctured or (0,1) transmitted")
        _check_node(t.d, k, "variable")
        if t.coeff <= 0:
            raise EnsembleError(f"variable coefficient {t.coeff} must be positive")
        if (t.channel, t.d) in seen_v:
            raise EnsembleError(f"duplicate variable term b={t.channel} d={t.d}")
        seen_v.add((t.channel, t.d))
    seen_c = set()
    for t in spec.chk_terms:
        _check_node(t.d, k, "check")
        if t.coeff <= 0:
            raise EnsembleError(f"check coefficient {t.coeff} must be positive")
        if t.d in seen_c:
            raise EnsembleError(f"duplicate check term d={t.d}")
        seen_c.add(t.d)
    mass = sum((t.coeff for t in spec.var_terms if t.transmitted), Fraction(0))
    if mass != 1:
        raise EnsembleError(f"transmitted variable mass is {mass}, must be exactly 1")
    nu_i = _var_edges(spec)
    mu_i = _chk_edges(spec)
    for i in range(k):
        if nu_i[i] != mu_i[i]:
            raise EnsembleError(
                f"edge balance violated for edge type {i + 1}: "
                f"nu_{i + 1}(1,1) = {nu_i[i]} but mu_{i + 1}(1) = {mu_i[i]}"
            )
        if nu_i[i] == 0:
            raise EnsembleError(f"edge type {i + 1} carries no edges; drop it")


def _check_node(d: Tuple[int, ...], k: int, side: str) -> None:
    if len(d) != k:
        raise EnsembleError(f"{side} node type {d} has {len(d)} entries, expected {k}")
    if any(x < 0 for x in d) or not any(d):
        raise EnsembleError(f"{side} node type {d} must be non-negative and not all zero")


def _var_edges(spec: EnsembleSpec) -> List[Fraction]:
    return [sum((t.coeff * t.d[i] for t in spec.var_terms), Fraction(0)) for i in range(spec.k)]


def _chk_edges(spec: EnsembleSpec) -> List[Fraction]:
    return [sum((t.coeff * t.d[i] for t in spec.chk_terms), Fraction(0)) for i in range(spec.k)]


def edge_fractions(spec: EnsembleSpec) -> Tuple[Fraction, ...]:
    """nu_i(1,1) = sum_{b,d} d_i nu_{b,d} for every edge type i."""
    return tuple(_var_edges(spec))


def design_rate(spec: EnsembleSpec) -> Fraction:
    """(total variable mass - total check mass) per transmitted bit."""
    nu_mass = sum((t.coeff for t in spec.var_terms), Fraction(0))
    mu_mass = sum((t.coeff for t in spec.chk_terms), Fraction(0))
    return nu_mass - mu_mass


def smallest_n(spec: EnsembleSpec) -> int:
    """Smallest length at which every node count is an integer."""
    out = 1
    for t in spec.var_terms:
        out = math.lcm(out, t.coeff.denominator)
    for t in spec.chk_terms:
        out = math.lcm(out, t.coeff.denominator)
    return out


# --- instantiation ----------------------------------------------------------


@dataclass(frozen=True)
class InstantiatedCounts:
    spec: EnsembleSpec
    n: int
    var_counts: Tuple[int, ...]
    chk_counts: Tuple[int, ...]
    edge_counts: Tuple[int, ...]

    @property
    def n_vars(self) -> int:
        return sum(self.var_counts)

    @property
    def n_checks(self) -> int:
        return sum(self.chk_counts)


def instantiate(spec: EnsembleSpec, n: int) -> InstantiatedCounts:
    if n < 1:
        raise InstantiationError("code length n must be positive")
    var_counts = []
    for t in spec.var_terms:
        c = t.coeff * n
        if c.denominator != 1:
            raise InstantiationError(
                f"n*nu for variable term b={t.channel} d={t.d} is {c} at n={n}; "
                f"smallest valid n is {smallest_n(spec)}"
            )
        var_counts.append(int(c))
    chk_counts = []
    for t in spec.chk_terms:
        c = t.coeff * n
        if c.denominator != 1:
            raise InstantiationError(
                f"n*mu for check term d={t.d} is {c} at n={n}; smallest valid n is {smallest_n(spec)}"
            )
        chk_counts.append(int(c))
    edges = tuple(int(f * n) for f in edge_fractions(spec))
    check_edges = tuple(sum(c * t.d[i] for c, t in zip(chk_counts, spec.chk_terms)) for i in range(spec.k))
    assert edges == check_edges
    return InstantiatedCounts(spec, n, tuple(var_counts), tuple(chk_counts), edges)


def ensemble_size(counts: InstantiatedCounts) -> int:
    """Number of graphs in the ensemble: the product of E_i!."""
    out = 1
    for e in counts.edge_counts:
        out *= math.factorial(e)
    return out


# --- construction -----------------------------------------------------------


def _frac(x: Number) -> Fraction:
    if isinstance(x, float):
        raise EnsembleError(f"coefficient {x!r} is a binary float; pass a string or Fraction")
    return Fraction(x)


def make_spec(n_edge_types: int, var_terms, chk_terms, name: str = "") -> EnsembleSpec:
    """Convenience constructor from plain tuples.

    ``var_terms`` holds ``(coeff, (b0, b1), d)`` and ``chk_terms`` ``(coeff, d)``.
    """
    vt = tuple(VarTerm(_frac(c), tuple(b), tuple(d)) for c, b, d in var_terms)
    ct = tuple(ChkTerm(_frac(c), tuple(d)) for c, d in chk_terms)
    return EnsembleSpec(n_edge_types, vt, ct, name=name)


def from_standard(lambda_coeffs: Mapping[int, Number], rho_coeffs: Mapping[int, Number]) -> EnsembleSpec:
    """Single edge-type ensemble equivalent to an edge-perspective pair (lambda, rho).

    Both mappings go from node degree ``i`` to the coefficient of ``x**(i-1)``,
    e.g. lambda(x) = x**2 is ``{3: 1}``.
    """
    lam = {int(i): _frac(c) for i, c in lambda_coeffs.items()}
    rho = {int(i): _frac(c) for i, c in rho_coeffs.items()}
    for label, dist in (("lambda", lam), ("rho", rho)):
        if not dist or any(i < 1 for i in dist) or any(c < 0 for c in dist.values()):
            raise EnsembleError(f"{label} must map degrees >= 1 to non-negative coefficients")
        if sum(dist.values()) != 1:
            raise EnsembleError(f"{label} coefficients sum to {sum(dist.values())}, not 1")
    norm = sum(c / i for i, c in lam.items())
    var = [(c / i / norm, TRANSMITTED, (i,)) for i, c in sorted(lam.items()) if c]
    chk = [(c / i / norm, (i,)) for i, c in sorted(rho.items()) if c]
    name = "standard(" + ",".join(f"{i}:{c}" for i, c in sorted(lam.items())) + ";" + ",".join(
        f"{i}:{c}" for i, c in sorted(rho.items())
    ) + ")"
    return make_spec(1, var, chk, name=name)


def regular(dv: int, dc: int) -> EnsembleSpec:
    return from_standard({dv: 1}, {dc: 1})


# --- text format ------------------------------------------------------------


def _parse_coeff(tok: str, line: int, col: int) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise SpecSyntaxError(f"bad coefficient {tok!r}", line, col) from None


def _parse_int(tok: str, line: int, col: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise SpecSyntaxError(f"expected integer, got {tok!r}", line, col) from None


def _tokens(raw: str) -> List[Tuple[str, int]]:
    out = []
    i = 0
    while i < len(raw):
        if raw[i].isspace():
            i += 1
            continue
        j = i
        while j < len(raw) and not raw[j].isspace():
            j += 1
        out.append((raw[i:j], i + 1))
        i = j
    return out


def parse_spec(text: str, name: str = "") -> EnsembleSpec:
    k = None
    var_terms: List[VarTerm] = []
    chk_terms: List[ChkTerm] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        raw = raw.split("#", 1)[0]
        toks = _tokens(raw)
        if not toks:
            continue
        head, col = toks[0]
        if k is None:
            if head != "edge_types" or len(toks) != 2:
                raise SpecSyntaxError("first statement must be 'edge_types <k>'", lineno, col)
            k = _parse_int(toks[1][0], lineno, toks[1][1])
            if k < 1:
                raise SpecSyntaxError("edge_types must be positive", lineno, toks[1][1])
            continue
        if head == "var":
            expect = 6 + k
            if len(toks) != expect or toks[2][0] != "b" or toks[5][0] != "d":
                end = toks[-1][1] if toks else 1
                raise SpecSyntaxError(
                    f"expected 'var <coeff> b <b0> <b1> d <d1..d{k}>' ({expect} fields, got {len(toks)})",
                    lineno,
                    end,
                )
            c = _parse_coeff(toks[1][0], lineno, toks[1][1])
            b = (_parse_int(toks[3][0], lineno, toks[3][1]), _parse_int(toks[4][0], lineno, toks[4][1]))
            d = tuple(_parse_int(t, lineno, cc) for t, cc in toks[6:])
            var_terms.append(VarTerm(c, b, d))
        elif head == "chk":
            expect = 3 + k
            if len(toks) != expect or toks[2][0] != "d":
                end = toks[-1][1]
                raise SpecSyntaxError(
                    f"expected 'chk <coeff> d <d1..d{k}>' ({expect} fields, got {len(toks)})", lineno, end
                )
            c = _parse_coeff(toks[1][0], lineno, toks[1][1])
            d = tuple(_parse_int(t, lineno, cc) for t, cc in toks[3:])
            chk_terms.append(ChkTerm(c, d))
        elif head == "edge_types":
            raise SpecSyntaxError("edge_types given twice", lineno, col)
        else:
            raise SpecSyntaxError(f"unknown statement {head!r}", lineno, col)
    if k is None:
        raise SpecSyntaxError("empty ensemble description", 1, 1)
    return EnsembleSpec(k, tuple(var_terms), tuple(chk_terms), name=name)


def load_spec(path: Union[str, Path]) -> EnsembleSpec:
    path = Path(path)
    return parse_spec(path.read_text(encoding="utf-8"), name=path.stem)


def serialize_spec(spec: EnsembleSpec) -> str:
    lines = [f"edge_types {spec.k}"]
    for t in spec.var_terms:
        lines.append(f"var {t.coeff} b {t.channel[0]} {t.channel[1]} d " + " ".join(map(str, t.d)))
    for t in spec.chk_terms:
        lines.append(f"chk {t.coeff} d " + " ".join(map(str, t.d)))
    return "\n".join(lines) + "\n"


def describe(spec: EnsembleSpec) -> Dict[str, object]:
    """Summary used by the ``info`` subcommand."""
    return {
        "edge_types": spec.k,
        "edge_fractions": [str(x) for x in edge_fractions(spec)],
        "design_rate": str(design_rate(spec)),
        "smallest_n": smallest_n(spec),
        "unpunctured": spec.unpunctured,
        "var_terms": [
            {"coeff": str(t.coeff), "b": list(t.channel), "d": list(t.d)} for t in spec.var_terms
        ],
        "chk_terms": [{"coeff": str(t.coeff), "d": list(t.d)} for t in spec.chk_terms],
    }


def counts_table(counts: InstantiatedCounts) -> Dict[str, object]:
    spec = counts.spec
    return {
        "n": counts.n,
        "var_counts": [
            {"b": list(t.channel), "d": list(t.d), "count": c} for t, c in zip(spec.var_terms, counts.var_counts)
        ],
        "chk_counts": [{"d": list(t.d), "count": c} for t, c in zip(spec.chk_terms, counts.chk_counts)],
        "edge_counts": list(counts.edge_counts),
        "ensemble_size": ensemble_size(counts),
    }

