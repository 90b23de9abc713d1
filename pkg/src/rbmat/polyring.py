"""Sparse multivariate polynomials with rational coefficients.

A :class:`PolyRing` fixes an ordered tuple of variable names; an
:class:`MPoly` maps exponent vectors over that tuple to nonzero ``mpq``
coefficients.  There is no division and no Groebner machinery: polynomials
here are built, multiplied, substituted and evaluated, nothing more.
"""
from __future__ import annotations

import re
from typing import Iterable, Mapping

from gmpy2 import mpq

from .exactscalar import _RATLIKE, format_scalar

__all__ = ["PolyRing", "MPoly", "poly_arith", "poly_eval", "poly_is_zero"]


class PolyRing:
    """Context for polynomials over Q in a fixed, ordered list of variables."""

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if any(not n for n in names):
            raise ValueError("variable names must be nonempty")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        self.names = names
        self.index = {n: i for i, n in enumerate(names)}

    def __eq__(self, other):
        return isinstance(other, PolyRing) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"PolyRing({list(self.names)})"

    @property
    def nvars(self) -> int:
        return len(self.names)

    def zero(self) -> MPoly:
        return MPoly(self, {})

    def one(self) -> MPoly:
        return self.const(1)

    def const(self, c) -> MPoly:
        c = mpq(c)
        return MPoly(self, {(0,) * self.nvars: c} if c else {})

    def var(self, name: str) -> MPoly:
        exp = [0] * self.nvars
        exp[self.index[name]] = 1
        return MPoly(self, {tuple(exp): mpq(1)})

    def gens(self) -> tuple[MPoly, ...]:
        return tuple(self.var(n) for n in self.names)

    def __call__(self, x) -> MPoly:
        if isinstance(x, MPoly):
            if x.ring != self:
                raise ValueError("variable-list mismatch")
            return x
        if isinstance(x, str):
            return self.parse(x)
        return self.const(x)

    def extend(self, names: Iterable[str]) -> PolyRing:
        return PolyRing(self.names + tuple(n for n in names if n not in self.index))

    def parse(self, text: str) -> MPoly:
        """Parse the ``coef*var^e*...`` sum format written by ``str(MPoly)``."""
        s = re.sub(r"\s+", "", text)
        if not s:
            raise ValueError("empty polynomial")
        if s[0] not in "+-":
            s = "+" + s
        if not re.fullmatch(r"(?:[+-][^+-]+)+", s):
            raise ValueError(f"malformed polynomial {text!r}")
        result = self.zero()
        for sign, body in re.findall(r"([+-])([^+-]+)", s):
            term = self.const(-1 if sign == "-" else 1)
            for factor in body.split("*"):
                m = re.fullmatch(r"(\d+)(?:/(\d+))?", factor)
                if m:
                    term = term * mpq(int(m.group(1)), int(m.group(2) or 1))
                    continue
                m = re.fullmatch(r"([A-Za-z_]\w*)(?:\^(\d+))?", factor)
                if not m or m.group(1) not in self.index:
                    raise ValueError(f"bad factor {factor!r} in {text!r}")
                term = term * self.var(m.group(1)) ** int(m.group(2) or 1)
            result = result + term
        return result


class MPoly:
    __slots__ = ("ring", "terms")

    def __init__(self, ring: PolyRing, terms: Mapping[tuple, mpq]):
        self.ring = ring
        self.terms = {e: c for e, c in terms.items() if c}

    def _coerce(self, other) -> MPoly:
        if isinstance(other, MPoly):
            if other.ring != self.ring:
                raise ValueError(
                    f"variable-list mismatch: {self.ring.names} vs {other.ring.names}")
            return other
        if isinstance(other, _RATLIKE):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        terms = dict(self.terms)
        for e, c in o.terms.items():
            terms[e] = terms.get(e, 0) + c
        return MPoly(self.ring, terms)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.ring, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        if isinstance(other, _RATLIKE):
            c = mpq(other)
            return MPoly(self.ring, {e: k * c for e, k in self.terms.items()})
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        terms: dict[tuple, mpq] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return MPoly(self.ring, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _RATLIKE):
            return self * (1 / mpq(other))
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = self.ring.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, MPoly):
            return self.ring == other.ring and self.terms == other.terms
        if isinstance(other, _RATLIKE):
            return self.terms == self.ring.const(other).terms
        return NotImplemented

    def __hash__(self):
        return hash((self.ring, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> mpq:
        return self.terms.get((0,) * self.ring.nvars, mpq(0))

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def variables(self) -> list[str]:
        used = set()
        for e in self.terms:
            used.update(i for i, k in enumerate(e) if k)
        return [self.ring.names[i] for i in sorted(used)]

    def coefficient(self, monomial: Mapping[str, int]) -> mpq:
        exp = [0] * self.ring.nvars
        for name, k in monomial.items():
            exp[self.ring.index[name]] = k
        return self.terms.get(tuple(exp), mpq(0))

    def sorted_terms(self) -> list[tuple[tuple, mpq]]:
        """Terms in graded-lex order, highest first."""
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def leading_coefficient(self) -> mpq:
        terms = self.sorted_terms()
        return terms[0][1] if terms else mpq(0)

    def monic(self) -> MPoly:
        """Scale so the graded-lex leading coefficient is 1 (zero stays zero)."""
        lc = self.leading_coefficient()
        return self if not lc else self * (1 / lc)

    def normalized(self) -> MPoly:
        return MPoly(self.ring, self.terms)

    def eval(self, assignment: Mapping[str, object]):
        """Evaluate at scalars; every variable that occurs must be assigned."""
        values = []
        for name in self.variables():
            if name not in assignment:
                raise KeyError(f"no value for variable {name!r}")
        for name in self.ring.names:
            values.append(assignment.get(name))
        total = mpq(0)
        for e, c in self.terms.items():
            term = c
            for v, k in zip(values, e):
                if k:
                    term = term * v ** k
            total = term + total
        return total

    def subs(self, mapping: Mapping[str, object], ring: PolyRing | None = None) -> MPoly:
        """Substitute polynomials or scalars for variables; result lives in ``ring``."""
        ring = ring or self.ring
        images = []
        for name in self.ring.names:
            if name in mapping:
                images.append(ring(mapping[name]))
            elif name in ring.index:
                images.append(ring.var(name))
            else:
                images.append(None)
        result = ring.zero()
        for e, c in self.terms.items():
            term = ring.const(c)
            for img, k in zip(images, e):
                if k:
                    if img is None:
                        raise ValueError("substitution leaves a variable outside the target ring")
                    term = term * img ** k
            result = result + term
        return result

    def linear_part(self) -> tuple[dict[str, mpq], mpq]:
        """Coefficients of a degree <= 1 polynomial as ({var: coef}, constant)."""
        if self.total_degree() > 1:
            raise ValueError("polynomial is not affine-linear")
        coeffs = {}
        for e, c in self.terms.items():
            if any(e):
                coeffs[self.ring.names[e.index(1)]] = c
        return coeffs, self.constant_value()

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = [f"{n}^{k}" if k > 1 else n
                       for n, k in zip(self.ring.names, e) if k]
            mag = abs(c)
            if not factors:
                body = format_scalar(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([format_scalar(mag)] + factors)
            parts.append(("-" if c < 0 else "+") + body)
        text = "".join(parts)
        return text[1:] if text[0] == "+" else text

    def __repr__(self):
        return f"MPoly({str(self)!r})"


def poly_arith(p: MPoly, q: MPoly, op: str) -> MPoly:
    if p.ring != q.ring:
        raise ValueError("variable-list mismatch")
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown op {op!r}")


def poly_eval(p: MPoly, assignment: Mapping[str, object]):
    return p.eval(assignment)


def poly_is_zero(p: MPoly) -> bool:
    return p.is_zero()
