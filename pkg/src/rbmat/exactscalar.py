"""Exact scalars: rationals, quadratic extensions Q(sqrt d) and prime fields.

Rationals are plain ``gmpy2.mpq`` values.  Elements of Q(sqrt d) are
:class:`QuadElem` and elements of F_p are :class:`ModElem`; both accept
ints and rationals as the other operand, so matrix and polynomial code can
stay generic.
"""
from __future__ import annotations

import re
from random import Random
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpq
from sympy.ntheory import factorint, isprime, sqrt_mod

_RATLIKE = (int, type(mpq(0)))

__all__ = [
    "ScalarDomain", "QQ", "QQi", "quadratic", "prime_field",
    "QuadElem", "ModElem", "NoSquareRoot",
    "parse_scalar", "format_scalar", "sqrt_in_domain", "parse_domain",
]


class NoSquareRoot(ArithmeticError):
    """Raised when a scalar has no square root inside its domain."""


def _rat(x) -> mpq:
    if isinstance(x, (QuadElem, ModElem)):
        raise TypeError(f"not a rational: {x!r}")
    return mpq(x)


class QuadElem:
    """a + b*sqrt(d) with rational a, b."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d: int):
        self.a = mpq(a)
        self.b = mpq(b)
        self.d = d

    def _lift(self, other):
        if isinstance(other, QuadElem):
            if other.d != self.d:
                raise ValueError(f"mixing Q(sqrt {self.d}) with Q(sqrt {other.d})")
            return other
        if isinstance(other, _RATLIKE):
            return QuadElem(other, 0, self.d)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadElem(self.a + o.a, self.b + o.b, self.d)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadElem(self.a - o.a, self.b - o.b, self.d)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return QuadElem(-self.a, -self.b, self.d)

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadElem(self.a * o.a + self.d * self.b * o.b,
                        self.a * o.b + self.b * o.a, self.d)

    __rmul__ = __mul__

    def norm(self) -> mpq:
        return self.a * self.a - self.d * self.b * self.b

    def inverse(self) -> QuadElem:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadElem(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = QuadElem(1, 0, self.d)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, QuadElem):
            return (self.d, self.a, self.b) == (other.d, other.a, other.b)
        if isinstance(other, _RATLIKE):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __repr__(self):
        return f"QuadElem({format_scalar(self)!r})"

    __str__ = lambda self: format_scalar(self)


class ModElem:
    """Residue class modulo a prime p."""

    __slots__ = ("v", "p")

    def __init__(self, v, p: int):
        if isinstance(v, ModElem):
            v = v.v
        elif not isinstance(v, int):
            q = mpq(v)
            den = int(q.denominator) % p
            if den == 0:
                raise ZeroDivisionError(f"denominator not invertible mod {p}")
            v = int(q.numerator) * pow(den, -1, p)
        self.v = v % p
        self.p = p

    def _lift(self, other):
        if isinstance(other, ModElem):
            if other.p != self.p:
                raise ValueError(f"mixing F_{self.p} with F_{other.p}")
            return other
        if isinstance(other, _RATLIKE):
            return ModElem(other, self.p)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return ModElem(self.v + o.v, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return ModElem(self.v - o.v, self.p)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return ModElem(-self.v, self.p)

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return ModElem(self.v * o.v, self.p)

    __rmul__ = __mul__

    def inverse(self) -> ModElem:
        if self.v == 0:
            raise ZeroDivisionError("inverse of zero")
        return ModElem(pow(self.v, -1, self.p), self.p)

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return ModElem(pow(self.v, k, self.p), self.p)

    def __eq__(self, other):
        if isinstance(other, ModElem):
            return self.p == other.p and self.v == other.v
        if isinstance(other, _RATLIKE):
            try:
                return self.v == ModElem(other, self.p).v
            except ZeroDivisionError:
                return False
        return NotImplemented

    def __hash__(self):
        return hash((self.v, self.p))

    def __bool__(self):
        return self.v != 0

    def __repr__(self):
        return f"ModElem({self.v}, {self.p})"

    __str__ = lambda self: str(self.v)


def _squarefree(d: int) -> bool:
    return all(e == 1 for e in factorint(abs(d)).values())


@dataclass(frozen=True)
class ScalarDomain:
    """One of ``Q``, ``Q(sqrt d)`` or ``F_p``.

    ``kind`` is ``"Q"``, ``"quad"`` or ``"Fp"``; ``param`` holds d or p.
    """

    kind: str = "Q"
    param: int = 0

    def __post_init__(self):
        if self.kind == "Q":
            return
        if self.kind == "quad":
            d = self.param
            if d in (0, 1) or not _squarefree(d) or (d > 0 and gmpy2.is_square(d)):
                raise ValueError(f"d={d} must be squarefree and not a square")
        elif self.kind == "Fp":
            p = self.param
            if not isprime(p) or p in (2, 3):
                raise ValueError(f"p={p} must be a prime other than 2 and 3")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @property
    def characteristic(self) -> int:
        return self.param if self.kind == "Fp" else 0

    @property
    def label(self) -> str:
        if self.kind == "Q":
            return "Q"
        if self.kind == "Fp":
            return f"Fp:{self.param}"
        return "Qi" if self.param == -1 else f"Qsqrt:{self.param}"

    def __str__(self):
        return self.label

    def zero(self):
        return self(0)

    def one(self):
        return self(1)

    def __call__(self, x):
        """Coerce an int, rational or same-domain element into this domain."""
        if self.kind == "Q":
            return _rat(x)
        if self.kind == "quad":
            if isinstance(x, QuadElem):
                if x.d != self.param:
                    raise ValueError(f"element of Q(sqrt {x.d}) is not in {self}")
                return x
            return QuadElem(_rat(x), 0, self.param)
        if isinstance(x, ModElem):
            if x.p != self.param:
                raise ValueError(f"element of F_{x.p} is not in {self}")
            return x
        return ModElem(_rat(x), self.param)

    def contains(self, x) -> bool:
        if self.kind == "Q":
            return not isinstance(x, (QuadElem, ModElem))
        if self.kind == "quad":
            return isinstance(x, QuadElem) and x.d == self.param
        return isinstance(x, ModElem) and x.p == self.param

    def random(self, rng: Random, bound: int = 9):
        """A random element with small numerators/denominators."""
        def rq():
            return mpq(rng.randint(-bound, bound), rng.randint(1, bound))
        if self.kind == "Q":
            return rq()
        if self.kind == "quad":
            return QuadElem(rq(), rq(), self.param)
        return ModElem(rng.randrange(self.param), self.param)

    def parse(self, text: str):
        return parse_scalar(text, self)

    def format(self, x) -> str:
        return format_scalar(self(x))

    def sqrt(self, x):
        return sqrt_in_domain(self(x))


QQ = ScalarDomain("Q")
QQi = ScalarDomain("quad", -1)


def quadratic(d: int) -> ScalarDomain:
    return ScalarDomain("quad", d)


def prime_field(p: int) -> ScalarDomain:
    return ScalarDomain("Fp", p)


def parse_domain(text: str) -> ScalarDomain:
    """Parse the CLI/JSON domain label: ``Q``, ``Qi``, ``Qsqrt:d``, ``Fp:p``."""
    text = text.strip()
    if text == "Q":
        return QQ
    if text == "Qi":
        return QQi
    m = re.fullmatch(r"Qsqrt:(-?\d+)", text)
    if m:
        return quadratic(int(m.group(1)))
    m = re.fullmatch(r"Fp:(\d+)", text)
    if m:
        return prime_field(int(m.group(1)))
    raise ValueError(f"unknown domain {text!r}")


_RAT = r"[+-]?\d+(?:/\d+)?"
_QUAD_RE = re.compile(
    rf"(?:(?P<a>{_RAT})(?=[+-]))?(?P<b>[+-]?(?:\d+(?:/\d+)?)?)\*?"
    r"(?:sqrt\((?P<d>-?\d+)\)|(?P<i>i))")


def _parse_rat(text: str) -> mpq:
    if not re.fullmatch(_RAT, text):
        raise ValueError(f"malformed rational {text!r}")
    num, _, den = text.partition("/")
    if den and int(den) == 0:
        raise ZeroDivisionError(f"zero denominator in {text!r}")
    return mpq(int(num), int(den) if den else 1)


def parse_scalar(text: str, domain: ScalarDomain = QQ):
    """Parse ``int``, ``int/int``, ``a+b*sqrt(d)``, ``b*sqrt(d)``, ``a+b*i``, ``b*i``."""
    s = re.sub(r"\s+", "", text)
    if not s:
        raise ValueError("empty scalar")
    if re.fullmatch(_RAT, s):
        if domain.kind == "Fp":
            num, _, den = s.partition("/")
            if den and int(den) % domain.param == 0:
                raise ZeroDivisionError(f"{den} is not invertible mod {domain.param}")
        return domain(_parse_rat(s))
    m = _QUAD_RE.fullmatch(s)
    if not m:
        raise ValueError(f"malformed scalar {text!r}")
    d = -1 if m.group("i") else int(m.group("d"))
    if domain.kind != "quad" or domain.param != d:
        raise ValueError(f"{text!r} needs Q(sqrt {d}), not {domain}")
    a = _parse_rat(m.group("a")) if m.group("a") else mpq(0)
    b_txt = m.group("b")
    b = _parse_rat(b_txt + "1") if b_txt in ("", "+", "-") else _parse_rat(b_txt)
    return QuadElem(a, b, d)


def _fmt_rat(q) -> str:
    q = mpq(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_scalar(x) -> str:
    """Canonical text form; ``parse_scalar(format_scalar(x), dom) == x``."""
    if isinstance(x, ModElem):
        return str(x.v)
    if isinstance(x, QuadElem):
        if x.b == 0:
            return _fmt_rat(x.a)
        unit = "i" if x.d == -1 else f"sqrt({x.d})"
        tail = f"{_fmt_rat(x.b)}*{unit}"
        if x.a == 0:
            return tail
        sep = "" if x.b < 0 else "+"
        return f"{_fmt_rat(x.a)}{sep}{tail}"
    return _fmt_rat(x)


def _rat_sqrt(q: mpq):
    if q < 0:
        return None
    n, d = int(q.numerator), int(q.denominator)
    if gmpy2.is_square(n) and gmpy2.is_square(d):
        return mpq(int(gmpy2.isqrt(n)), int(gmpy2.isqrt(d)))
    return None


def sqrt_in_domain(s):
    """Return t with t*t == s, preferring the root with nonnegative rational part.

    In F_p the smaller residue is returned.  Raises :class:`NoSquareRoot`.
    """
    if isinstance(s, ModElem):
        if s.v == 0:
            return s
        roots = sqrt_mod(s.v, s.p, all_roots=True)
        if not roots:
            raise NoSquareRoot(f"{s} is not a square mod {s.p}")
        return ModElem(min(roots), s.p)
    if isinstance(s, QuadElem):
        a, b, d = s.a, s.b, s.d
        candidates = []
        if b == 0:
            r = _rat_sqrt(a)
            if r is not None:
                candidates.append(QuadElem(r, 0, d))
            r = _rat_sqrt(a / d)
            if r is not None:
                candidates.append(QuadElem(0, r, d))
        else:
            n = _rat_sqrt(s.norm())
            if n is not None:
                for x2 in ((a + n) / 2, (a - n) / 2):
                    x = _rat_sqrt(x2)
                    if x:
                        candidates.append(QuadElem(x, b / (2 * x), d))
        if not candidates:
            raise NoSquareRoot(f"{format_scalar(s)} has no square root in Q(sqrt {d})")
        t = candidates[0]
        if t.a < 0 or (t.a == 0 and t.b < 0):
            t = -t
        return t
    r = _rat_sqrt(mpq(s))
    if r is None:
        raise NoSquareRoot(f"{_fmt_rat(s)} has no rational square root")
    return r
