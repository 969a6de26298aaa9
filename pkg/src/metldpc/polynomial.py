"""Exact sparse multivariate polynomials over the rationals.

Terms live in a dict keyed by exponent tuples. Coefficients are Python ints
when integral and :class:`fractions.Fraction` otherwise, so integer-only
work (the constellation counts) never pays for rational normalisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple, Union

Coeff = Union[int, Fraction]
Exponents = Tuple[int, ...]

__all__ = [
    "DegreeCap",
    "SparsePoly",
    "poly_add",
    "poly_mul",
    "poly_pow",
    "coef",
]


def _norm(c) -> Coeff:
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, Rational):
        return _norm(Fraction(c.numerator, c.denominator))
    if isinstance(c, str):
        return _norm(Fraction(c))
    raise TypeError(f"inexact coefficient {c!r}; use int, Fraction or a 'p/q' string")


@dataclass(frozen=True)
class DegreeCap:
    """Per-variable and total-degree truncation bounds (``None`` = unbounded)."""

    caps: Tuple[Optional[int], ...] = ()
    total_cap: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "caps", tuple(self.caps))
        for c in self.caps:
            if c is not None and c < 0:
                raise ValueError("degree caps must be non-negative")
        if self.total_cap is not None and self.total_cap < 0:
            raise ValueError("total degree cap must be non-negative")

    @classmethod
    def none(cls) -> "DegreeCap":
        return cls()

    def allows(self, exps: Exponents) -> bool:
        for e, c in zip(exps, self.caps):
            if c is not None and e > c:
                return False
        if self.total_cap is not None and sum(exps) > self.total_cap:
            return False
        return True


class SparsePoly:
    """Immutable polynomial in ``arity`` variables with exact coefficients."""

    __slots__ = ("arity", "_terms")

    def __init__(self, arity: int, terms: Optional[Mapping[Sequence[int], object]] = None):
        if arity < 0:
            raise ValueError("arity must be non-negative")
        self.arity = arity
        clean: Dict[Exponents, Coeff] = {}
        for exps, c in (terms or {}).items():
            key = tuple(int(e) for e in exps)
            if len(key) != arity:
                raise ValueError(f"exponent vector {key} does not have arity {arity}")
            if any(e < 0 for e in key):
                raise ValueError(f"negative exponent in {key}")
            c = _norm(c)
            if c:
                clean[key] = clean.get(key, 0) + c
                if not clean[key]:
                    del clean[key]
        self._terms = clean

    @classmethod
    def _raw(cls, arity: int, terms: Dict[Exponents, Coeff]) -> "SparsePoly":
        p = cls.__new__(cls)
        p.arity = arity
        p._terms = terms
        return p

    @classmethod
    def constant(cls, arity: int, value=1) -> "SparsePoly":
        return cls(arity, {(0,) * arity: value})

    @classmethod
    def monomial(cls, exps: Sequence[int], value=1) -> "SparsePoly":
        return cls(len(exps), {tuple(exps): value})

    @classmethod
    def variable(cls, arity: int, index: int) -> "SparsePoly":
        exps = [0] * arity
        exps[index] = 1
        return cls(arity, {tuple(exps): 1})

    # --- container protocol -------------------------------------------------

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Tuple[Exponents, Coeff]]:
        for key in sorted(self._terms):
            yield key, self._terms[key]

    def items(self) -> Iterator[Tuple[Exponents, Coeff]]:
        return iter(self)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if isinstance(other, SparsePoly):
            return self.arity == other.arity and self._terms == other._terms
        return NotImplemented

    def __hash__(self):
        return hash((self.arity, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"SparsePoly({self.arity}, 0)"
        body = " + ".join(f"{c}*x^{list(e)}" for e, c in self)
        return f"SparsePoly({self.arity}, {body})"

    # --- arithmetic ---------------------------------------------------------

    def __add__(self, other: "SparsePoly") -> "SparsePoly":
        return poly_add(self, other)

    def __neg__(self) -> "SparsePoly":
        return SparsePoly._raw(self.arity, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other: "SparsePoly") -> "SparsePoly":
        return poly_add(self, -other)

    def __mul__(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            return poly_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "SparsePoly":
        return poly_pow(self, k)

    def scale(self, factor) -> "SparsePoly":
        factor = _norm(factor)
        if not factor:
            return SparsePoly._raw(self.arity, {})
        return SparsePoly._raw(self.arity, {e: _norm(c * factor) for e, c in self._terms.items()})

    def truncate(self, cap: DegreeCap) -> "SparsePoly":
        return SparsePoly._raw(self.arity, {e: c for e, c in self._terms.items() if cap.allows(e)})

    def derivative(self, index: int) -> "SparsePoly":
        out: Dict[Exponents, Coeff] = {}
        for e, c in self._terms.items():
            k = e[index]
            if k:
                key = e[:index] + (k - 1,) + e[index + 1:]
                out[key] = c * k
        return SparsePoly._raw(self.arity, out)

    def evaluate(self, point: Sequence):
        """Evaluate at ``point``; exact when the point is rational."""
        if len(point) != self.arity:
            raise ValueError("point length does not match arity")
        total = 0
        for e, c in self._terms.items():
            term = c
            for x, k in zip(point, e):
                if k:
                    term = term * x ** k
            total = total + term
        return _norm(total) if isinstance(total, (int, Fraction)) else total

    def substitute(self, index: int, value) -> "SparsePoly":
        """Fix variable ``index`` at an exact ``value``; the arity is kept."""
        value = _norm(value)
        out: Dict[Exponents, Coeff] = {}
        for e, c in self._terms.items():
            key = e[:index] + (0,) + e[index + 1:]
            out[key] = out.get(key, 0) + c * value ** e[index]
        return SparsePoly(self.arity, out)

    def max_degrees(self) -> Tuple[int, ...]:
        if not self._terms:
            return (0,) * self.arity
        return tuple(max(e[i] for e in self._terms) for i in range(self.arity))

    # --- debug serialisation -----------------------------------------------

    def to_text(self) -> str:
        """One term per line: ``p/q  e1 e2 ... ek`` in lexicographic order."""
        lines = []
        for e, c in self:
            c = Fraction(c)
            lines.append(f"{c.numerator}/{c.denominator}  " + " ".join(str(x) for x in e))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, arity: int) -> "SparsePoly":
        terms: Dict[Exponents, Coeff] = {}
        for raw in text.splitlines():
            raw = raw.strip()
            if not raw:
                continue
            head, *exps = raw.split()
            key = tuple(int(x) for x in exps)
            terms[key] = terms.get(key, 0) + Fraction(head)
        return cls(arity, terms)


def _check_arity(a: SparsePoly, b: SparsePoly) -> None:
    if a.arity != b.arity:
        raise ValueError(f"arity mismatch: {a.arity} vs {b.arity}")


def poly_add(a: SparsePoly, b: SparsePoly) -> SparsePoly:
    _check_arity(a, b)
    out = dict(a._terms)
    for e, c in b._terms.items():
        v = out.get(e, 0) + c
        if v:
            out[e] = _norm(v)
        else:
            out.pop(e, None)
    return SparsePoly._raw(a.arity, out)


def poly_mul(a: SparsePoly, b: SparsePoly, cap: Optional[DegreeCap] = None) -> SparsePoly:
    """Product of ``a`` and ``b`` with every term outside ``cap`` dropped."""
    _check_arity(a, b)
    if len(a) > len(b):
        a, b = b, a
    caps = None
    total = None
    if cap is not None:
        caps = tuple(cap.caps) + (None,) * (a.arity - len(cap.caps))
        total = cap.total_cap
    bt = list(b._terms.items())
    out: Dict[Exponents, Coeff] = {}
    get = out.get
    for ea, ca in a._terms.items():
        for eb, cb in bt:
            key = tuple(x + y for x, y in zip(ea, eb))
            if caps is not None:
                if any(c is not None and k > c for k, c in zip(key, caps)):
                    continue
                if total is not None and sum(key) > total:
                    continue
            out[key] = get(key, 0) + ca * cb
    return SparsePoly._raw(a.arity, {e: _norm(c) for e, c in out.items() if c})


def poly_pow(a: SparsePoly, k: int, cap: Optional[DegreeCap] = None) -> SparsePoly:
    """``a**k`` by binary exponentiation, truncating after every multiply."""
    if k < 0:
        raise ValueError("exponent must be non-negative")
    result = SparsePoly.constant(a.arity, 1)
    if cap is not None:
        result = result.truncate(cap)
    base = a if cap is None else a.truncate(cap)
    while k:
        if k & 1:
            result = poly_mul(result, base, cap)
        k >>= 1
        if k:
            base = poly_mul(base, base, cap)
    return result


def coef(a: SparsePoly, exps: Sequence[int]) -> Coeff:
    key = tuple(exps)
    if len(key) != a.arity:
        raise ValueError(f"exponent vector {key} does not have arity {a.arity}")
    return a._terms.get(key, 0)


def product(polys: Iterable[SparsePoly], arity: int, cap: Optional[DegreeCap] = None) -> SparsePoly:
    out = SparsePoly.constant(arity, 1)
    for p in polys:
        out = poly_mul(out, p, cap)
    return out
