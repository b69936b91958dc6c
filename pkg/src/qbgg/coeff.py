"""Exact scalar arithmetic shared by every other module.

``ExactScalar`` is ``gmpy2.mpq`` (always in lowest terms).  ``Poly`` is a
sparse commutative Laurent polynomial over ``mpq`` in a fixed set of formal
variables: the spectral parameters ``x``, ``y``, ``z``, ``w`` and the
representation label ``t``.  A ``LaurentScalar`` is a ``Poly`` in ``t`` alone.
"""

from __future__ import annotations

import math
import os
import random
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

__all__ = [
    "ExactScalar",
    "mpq",
    "VARS",
    "Poly",
    "LaurentScalar",
    "X",
    "T",
    "as_scalar",
    "parse_scalar",
    "format_scalar",
    "field_ops",
    "laurent_limit_at_infinity",
    "laurent_to_json",
    "laurent_from_json",
    "is_zero",
    "coeff_eval",
    "default_seed",
    "make_rng",
    "sample_rational",
    "sample_distinct",
    "TauPoint",
    "FloatScalar",
]

ExactScalar = mpq

VARS = ("x", "y", "z", "w", "t")
_VIDX = {v: i for i, v in enumerate(VARS)}
_NV = len(VARS)
_ZERO_EXP = (0,) * _NV


def as_scalar(v) -> mpq:
    """Coerce an int, mpq, Fraction or "p/q" string to ``mpq``."""
    if isinstance(v, str):
        return parse_scalar(v)
    if isinstance(v, float):
        raise TypeError("floats are not exact scalars")
    return mpq(v)


def parse_scalar(s: str) -> mpq:
    return mpq(s.strip())


def format_scalar(q) -> str:
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


def is_zero(c) -> bool:
    if isinstance(c, Poly):
        return not c.terms
    return c == 0


class Poly:
    """Sparse Laurent polynomial in ``VARS`` with ``mpq`` coefficients.

    ``terms`` maps an exponent tuple (one int per variable in ``VARS``) to a
    nonzero coefficient.  Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, mpq] | None = None):
        self.terms = {} if terms is None else {k: v for k, v in terms.items() if v != 0}

    @classmethod
    def _raw(cls, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def const(cls, c) -> "Poly":
        c = as_scalar(c)
        return cls._raw({_ZERO_EXP: c} if c != 0 else {})

    @classmethod
    def var(cls, name: str, power: int = 1) -> "Poly":
        e = [0] * _NV
        e[_VIDX[name]] = power
        return cls._raw({tuple(e): mpq(1)})

    @staticmethod
    def coerce(v) -> "Poly":
        return v if isinstance(v, Poly) else Poly.const(v)

    # ring operations
    def __add__(self, other):
        if not isinstance(other, Poly):
            other = as_scalar(other)
            if other == 0:
                return self
            r = dict(self.terms)
            v = r.get(_ZERO_EXP, 0) + other
            if v == 0:
                r.pop(_ZERO_EXP, None)
            else:
                r[_ZERO_EXP] = v
            return Poly._raw(r)
        if len(other.terms) > len(self.terms):
            self, other = other, self
        r = dict(self.terms)
        for k, v in other.terms.items():
            s = r.get(k)
            if s is None:
                r[k] = v
            else:
                s = s + v
                if s == 0:
                    del r[k]
                else:
                    r[k] = s
        return Poly._raw(r)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, Poly) else -as_scalar(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            other = as_scalar(other)
            if other == 0:
                return Poly._raw({})
            return Poly._raw({k: v * other for k, v in self.terms.items()})
        r: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                s = r.get(k)
                r[k] = v1 * v2 if s is None else s + v1 * v2
        return Poly._raw({k: v for k, v in r.items() if v != 0})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Poly):
            if len(other.terms) != 1:
                raise ZeroDivisionError("division only by monomials") if not other.terms else ValueError(
                    "division only by monomials"
                )
            (k2, v2), = other.terms.items()
            return Poly._raw({tuple(a - b for a, b in zip(k, k2)): v / v2 for k, v in self.terms.items()})
        other = as_scalar(other)
        if other == 0:
            raise ZeroDivisionError("division by zero")
        return Poly._raw({k: v / other for k, v in self.terms.items()})

    def __pow__(self, n: int):
        if n < 0:
            if len(self.terms) != 1:
                raise ValueError("negative powers only of monomials")
            (k, v), = self.terms.items()
            return Poly._raw({tuple(a * n for a in k): v**n})
        r = Poly.const(1)
        b = self
        while n:
            if n & 1:
                r = r * b
            b = b * b
            n >>= 1
        return r

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.terms == other.terms
        try:
            other = as_scalar(other)
        except (TypeError, ValueError):
            return NotImplemented
        if other == 0:
            return not self.terms
        return self.terms == {_ZERO_EXP: other}

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    # structure
    def is_constant(self) -> bool:
        return not self.terms or set(self.terms) == {_ZERO_EXP}

    def constant_value(self) -> mpq:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get(_ZERO_EXP, mpq(0))

    def degrees(self, name: str) -> tuple[int, int]:
        """(min, max) exponent of ``name``; (0, 0) for the zero polynomial."""
        i = _VIDX[name]
        es = [k[i] for k in self.terms]
        return (min(es), max(es)) if es else (0, 0)

    def coefficients(self, name: str) -> dict[int, "Poly"]:
        """Split by powers of ``name``: {exponent: coefficient Poly}."""
        i = _VIDX[name]
        out: dict[int, dict] = {}
        for k, v in self.terms.items():
            kk = k[:i] + (0,) + k[i + 1 :]
            out.setdefault(k[i], {})[kk] = v
        return {e: Poly._raw(d) for e, d in out.items()}

    def subs(self, values: Mapping[str, object]) -> "Poly":
        """Substitute variables by scalars or polynomials."""
        result = Poly()
        idx = [(_VIDX[n], Poly.coerce(v)) for n, v in values.items()]
        cache: dict = {}
        for k, c in self.terms.items():
            kk = list(k)
            term = Poly.const(c)
            for i, val in idx:
                e = kk[i]
                if e:
                    kk[i] = 0
                    key = (i, e)
                    if key not in cache:
                        cache[key] = val**e
                    term = term * cache[key]
            result = result + term * Poly._raw({tuple(kk): mpq(1)})
        return result

    def shift(self, name: str, c) -> "Poly":
        return self.subs({name: Poly.var(name) + c})

    def evaluate(self, values: Mapping[str, object]):
        """Full evaluation; returns ``mpq`` if no variables remain."""
        p = self.subs(values)
        return p.constant_value() if p.is_constant() else p

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, reverse=True):
            v = self.terms[k]
            mon = "*".join(
                (VARS[i] if e == 1 else f"{VARS[i]}^{e}") for i, e in enumerate(k) if e
            )
            parts.append(f"{format_scalar(v)}" + (f"*{mon}" if mon else ""))
        return " + ".join(parts)


LaurentScalar = Poly
X = Poly.var("x")
T = Poly.var("t")


def coeff_eval(c, values: Mapping[str, object]):
    """Evaluate a scalar-or-Poly coefficient."""
    if isinstance(c, Poly):
        return c.evaluate(values)
    return c


class FloatScalar:
    """Double-precision (complex) scalar for oracle cross-checks only."""

    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, FloatScalar):
            value = value.value
        elif isinstance(value, type(mpq(0))):
            value = float(value)
        self.value = complex(value)

    @staticmethod
    def _v(o):
        return o.value if isinstance(o, FloatScalar) else FloatScalar(o).value

    def __add__(self, o):
        return FloatScalar(self.value + self._v(o))

    __radd__ = __add__

    def __sub__(self, o):
        return FloatScalar(self.value - self._v(o))

    def __rsub__(self, o):
        return FloatScalar(self._v(o) - self.value)

    def __mul__(self, o):
        return FloatScalar(self.value * self._v(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        d = self._v(o)
        if d == 0:
            raise ZeroDivisionError("division by zero")
        return FloatScalar(self.value / d)

    def __rtruediv__(self, o):
        if self.value == 0:
            raise ZeroDivisionError("division by zero")
        return FloatScalar(self._v(o) / self.value)

    def __neg__(self):
        return FloatScalar(-self.value)

    def __abs__(self):
        return abs(self.value)

    def close_to(self, exact, rel: float = 1e-12) -> bool:
        e = complex(float(exact)) if not isinstance(exact, FloatScalar) else exact.value
        return abs(self.value - e) <= rel * max(1.0, abs(e))

    def __repr__(self):
        v = self.value
        return f"FloatScalar({v.real!r})" if v.imag == 0 else f"FloatScalar({v!r})"


def field_ops(op: str, a, b=None):
    """``add``/``sub``/``mul``/``div``/``neg``: exact on mpq or Poly operands, floating if either is a FloatScalar."""
    if isinstance(a, FloatScalar) or isinstance(b, FloatScalar):
        a = FloatScalar(a)
        if op == "neg":
            return -a
        b = FloatScalar(b)
        return {"add": a.__add__, "sub": a.__sub__, "mul": a.__mul__, "div": a.__truediv__}[op](b)
    a = a if isinstance(a, Poly) else as_scalar(a)
    if op == "neg":
        return -a
    b = b if isinstance(b, Poly) else as_scalar(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if is_zero(b):
            raise ZeroDivisionError("division by zero")
        if isinstance(a, Poly) or isinstance(b, Poly):
            return Poly.coerce(a) / b
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def laurent_limit_at_infinity(p, name: str = "t"):
    """Coefficient of ``name``^0, provided no positive power of ``name`` occurs."""
    p = Poly.coerce(p)
    lo, hi = p.degrees(name)
    if hi > 0:
        raise ValueError("divergent limit")
    c = p.coefficients(name).get(0, Poly())
    return c.constant_value() if c.is_constant() else c


def laurent_to_json(p) -> dict:
    p = Poly.coerce(p)
    out = {}
    for e, c in sorted(p.coefficients("t").items()):
        out[str(e)] = format_scalar(c.constant_value())
    return out


def laurent_from_json(d: Mapping[str, str]) -> Poly:
    r = Poly()
    for e, v in d.items():
        r = r + Poly.var("t", int(e)) * parse_scalar(v)
    return r


# seeded sampling

def default_seed(fallback: int = 42) -> int:
    env = os.environ.get("QBGG_SEED")
    return int(env) if env not in (None, "") else fallback


def make_rng(seed: int | None = None) -> random.Random:
    return random.Random(default_seed() if seed is None else seed)


def sample_rational(rng: random.Random, lo: int = 1, hi: int = 997) -> mpq:
    return mpq(rng.randint(lo, hi), rng.randint(lo, hi))


def sample_distinct(rng: random.Random, k: int, ok=lambda vals: True, tries: int = 1000) -> list[mpq]:
    """Draw ``k`` distinct rationals, redrawing until ``ok(vals)`` holds."""
    for _ in range(tries):
        vals = [sample_rational(rng) for _ in range(k)]
        if len(set(vals)) == k and ok(vals):
            return vals
    raise RuntimeError("could not satisfy sampling constraints")


class TauPoint:
    """Twist parameters ``tau_i = base_i ** root`` with rational bases.

    Rational powers ``tau_i ** e`` are exact whenever ``e * root`` is an
    integer, which lets fractional labels ``t`` be evaluated in ``mpq``.
    """

    __slots__ = ("bases", "root")

    def __init__(self, bases: Sequence, root: int = 1):
        self.bases = tuple(as_scalar(b) for b in bases)
        self.root = int(root)
        if any(b == 0 for b in self.bases):
            raise ValueError("twist parameters must be nonzero")

    @classmethod
    def from_values(cls, values: Sequence) -> "TauPoint":
        return cls(values, 1)

    @classmethod
    def sample(cls, rng: random.Random, k: int, root: int = 1, ok=lambda vals: True) -> "TauPoint":
        """Random point whose bases have numerator and denominator uniform in [1, 997]."""
        for _ in range(10000):
            bases = [sample_rational(rng) for _ in range(k)]
            pt = cls(bases, root)
            vals = pt.values
            if len(set(vals)) == k and all(v != 1 for v in vals) and ok(vals):
                return pt
        raise RuntimeError("could not satisfy sampling constraints")

    def __len__(self):
        return len(self.bases)

    @property
    def values(self) -> tuple:
        return tuple(b**self.root for b in self.bases)

    def inverted(self, which: Iterable[int]) -> "TauPoint":
        w = set(which)
        return TauPoint([1 / b if i in w else b for i, b in enumerate(self.bases)], self.root)

    def permuted(self, src: Sequence[int]) -> "TauPoint":
        """New point with tau'_i = tau_{src[i]} (0-based)."""
        return TauPoint([self.bases[s] for s in src], self.root)

    def power(self, i: int, e) -> mpq:
        e = as_scalar(e) * self.root
        if e.denominator != 1:
            raise ValueError(f"tau_{i + 1}^{e / self.root} is not rational at this point")
        return self.bases[i] ** int(e)

    def monomial(self, exps: Mapping[int, object]) -> mpq:
        r = mpq(1)
        for i, e in exps.items():
            if e != 0:
                r *= self.power(i, e)
        return r

    def to_json(self):
        return {"bases": [format_scalar(b) for b in self.bases], "root": self.root}

    def __repr__(self):
        return f"TauPoint({[format_scalar(b) for b in self.bases]}, root={self.root})"


def lcm_denominators(values: Iterable) -> int:
    r = 1
    for v in values:
        r = math.lcm(r, int(as_scalar(v).denominator))
    return r
