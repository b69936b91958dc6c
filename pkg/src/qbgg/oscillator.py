"""Bosonic oscillator algebra in normal-ordered form, its Fock module and twisted traces.

Each oscillator pair ``p`` has a creation operator ``abar_p`` and an
annihilation operator ``a_p`` with ``[a_p, abar_q] = delta_pq``; distinct pairs
commute.  A normal-ordered monomial is stored as two exponent tuples
``(creation, annihilation)``; creations always stand to the left.
Coefficients are ``mpq`` scalars or ``Poly`` polynomials.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from math import comb, factorial
from typing import Callable, Iterable, Mapping, Sequence

from .coeff import Poly, as_scalar, format_scalar, is_zero, mpq, parse_scalar

__all__ = [
    "OscSpace",
    "NormalPoly",
    "TwistWeights",
    "FockVector",
    "normal_mul",
    "substitute_generators",
    "fock_trace",
    "apply_to_fock",
    "truncated_matrix",
    "fock_trace_float",
    "fock_basis",
]


class OscSpace:
    """An ordered list of distinct oscillator-pair labels."""

    __slots__ = ("pairs", "index")

    def __init__(self, pairs: Iterable):
        self.pairs = tuple(pairs)
        self.index = {p: i for i, p in enumerate(self.pairs)}
        if len(self.index) != len(self.pairs):
            raise ValueError("pair labels must be distinct")

    def __len__(self):
        return len(self.pairs)

    def __eq__(self, other):
        return isinstance(other, OscSpace) and self.pairs == other.pairs

    def __hash__(self):
        return hash(self.pairs)

    def __repr__(self):
        return f"OscSpace({list(self.pairs)})"

    # generator shortcuts
    def one(self) -> "NormalPoly":
        return NormalPoly.const(self, 1)

    def zero(self) -> "NormalPoly":
        return NormalPoly(self)

    def cre(self, p) -> "NormalPoly":
        return NormalPoly.monomial(self, {p: 1}, {})

    def ann(self, p) -> "NormalPoly":
        return NormalPoly.monomial(self, {}, {p: 1})

    def num(self, p) -> "NormalPoly":
        return NormalPoly.monomial(self, {p: 1}, {p: 1})


@lru_cache(maxsize=None)
def _reorder(ann: tuple, cre: tuple) -> tuple:
    """Normal-order ``a^ann abar^cre``: tuples (j, integer coefficient) per contraction vector."""
    per_pair = []
    for k, m in zip(ann, cre):
        per_pair.append(
            [(j, comb(k, j) * comb(m, j) * factorial(j)) for j in range(min(k, m) + 1)]
        )
    out = []
    for choice in itertools.product(*per_pair):
        c = 1
        for _, v in choice:
            c *= v
        out.append((tuple(j for j, _ in choice), c))
    return tuple(out)


@lru_cache(maxsize=1 << 20)
def _mono_mul(k1: tuple, k2: tuple) -> tuple:
    (c1, a1), (c2, a2) = k1, k2
    out = []
    for j, c in _reorder(a1, c2):
        cre = tuple(x + y - z for x, y, z in zip(c1, c2, j))
        ann = tuple(x - z + y for x, y, z in zip(a1, a2, j))
        out.append(((cre, ann), c))
    return tuple(out)


def _cmul(a, b):
    # put Poly on the left so gmpy2 never sees a Poly operand first
    if isinstance(b, Poly) and not isinstance(a, Poly):
        return b * a
    return a * b


def _cadd(a, b):
    if isinstance(b, Poly) and not isinstance(a, Poly):
        return b + a
    return a + b


class NormalPoly:
    """Element of the oscillator algebra in canonical normal-ordered form."""

    __slots__ = ("space", "terms")

    def __init__(self, space: OscSpace, terms: Mapping | None = None):
        self.space = space
        self.terms = {} if terms is None else {k: v for k, v in terms.items() if not is_zero(v)}

    @classmethod
    def _raw(cls, space, terms):
        p = cls.__new__(cls)
        p.space = space
        p.terms = terms
        return p

    @classmethod
    def const(cls, space: OscSpace, c) -> "NormalPoly":
        c = c if isinstance(c, Poly) else as_scalar(c)
        z = (0,) * len(space)
        return cls._raw(space, {(z, z): c} if not is_zero(c) else {})

    @classmethod
    def monomial(cls, space: OscSpace, cre: Mapping, ann: Mapping, coeff=1) -> "NormalPoly":
        c = [0] * len(space)
        a = [0] * len(space)
        for p, e in cre.items():
            c[space.index[p]] += e
        for p, e in ann.items():
            a[space.index[p]] += e
        coeff = coeff if isinstance(coeff, Poly) else as_scalar(coeff)
        return cls(space, {(tuple(c), tuple(a)): coeff})

    def _coerce(self, other) -> "NormalPoly":
        if isinstance(other, NormalPoly):
            if other.space != self.space:
                raise ValueError("mismatched oscillator spaces")
            return other
        return NormalPoly.const(self.space, other)

    # arithmetic
    def __add__(self, other):
        other = self._coerce(other)
        r = dict(self.terms)
        for k, v in other.terms.items():
            s = r.get(k)
            if s is None:
                r[k] = v
            else:
                s = _cadd(s, v)
                if is_zero(s):
                    del r[k]
                else:
                    r[k] = s
        return NormalPoly._raw(self.space, r)

    __radd__ = __add__

    def __neg__(self):
        return NormalPoly._raw(self.space, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "NormalPoly":
        if is_zero(c):
            return NormalPoly(self.space)
        return NormalPoly._raw(
            self.space, {k: v for k, v in ((k, _cmul(c, v)) for k, v in self.terms.items()) if not is_zero(v)}
        )

    def __mul__(self, other):
        if isinstance(other, NormalPoly):
            return normal_mul(self, other)
        return self.scale(other if isinstance(other, Poly) else as_scalar(other))

    def __rmul__(self, other):
        return self.scale(other if isinstance(other, Poly) else as_scalar(other))

    def __pow__(self, n: int):
        r = NormalPoly.const(self.space, 1)
        for _ in range(n):
            r = r * self
        return r

    def __eq__(self, other):
        if isinstance(other, NormalPoly):
            return self.space == other.space and self.terms == other.terms
        try:
            return self.terms == self._coerce(other).terms
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.space, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    # inspection
    def is_scalar(self) -> bool:
        z = (0,) * len(self.space)
        return not self.terms or set(self.terms) == {(z, z)}

    def scalar_part(self):
        z = (0,) * len(self.space)
        return self.terms.get((z, z), mpq(0))

    def ann_degree(self) -> int:
        return max((sum(a) for _, a in self.terms), default=0)

    def cre_degree(self) -> int:
        return max((sum(c) for c, _ in self.terms), default=0)

    def map_coeffs(self, f: Callable) -> "NormalPoly":
        return NormalPoly(self.space, {k: f(v) for k, v in self.terms.items()})

    def subs_params(self, values: Mapping[str, object]) -> "NormalPoly":
        """Substitute formal variables inside the coefficients."""

        def f(v):
            if isinstance(v, Poly):
                r = v.subs(values)
                return r.constant_value() if r.is_constant() else r
            return v

        return self.map_coeffs(f)

    def coefficients(self, name: str = "x") -> dict[int, "NormalPoly"]:
        """Split by powers of a formal variable in the coefficients."""
        out: dict[int, dict] = {}
        for k, v in self.terms.items():
            if isinstance(v, Poly):
                for e, c in v.coefficients(name).items():
                    cc = c.constant_value() if c.is_constant() else c
                    out.setdefault(e, {})[k] = cc
            else:
                out.setdefault(0, {})[k] = v
        return {e: NormalPoly(self.space, d) for e, d in out.items()}

    def embed(self, target: OscSpace) -> "NormalPoly":
        """Re-express in a larger space containing every label of this one."""
        idx = [target.index[p] for p in self.space.pairs]
        n = len(target)
        terms = {}
        for (c, a), v in self.terms.items():
            cc = [0] * n
            aa = [0] * n
            for i, j in enumerate(idx):
                cc[j] = c[i]
                aa[j] = a[i]
            terms[(tuple(cc), tuple(aa))] = v
        return NormalPoly._raw(target, terms)

    def restrict(self, target: OscSpace) -> "NormalPoly":
        """Re-express in a smaller space; every used pair must belong to ``target``."""
        idx = {i: target.index.get(p) for i, p in enumerate(self.space.pairs)}
        n = len(target)
        terms = {}
        for (c, a), v in self.terms.items():
            cc = [0] * n
            aa = [0] * n
            for i, j in idx.items():
                if j is None:
                    if c[i] or a[i]:
                        raise ValueError(f"pair {self.space.pairs[i]!r} is not in the target space")
                    continue
                cc[j] = c[i]
                aa[j] = a[i]
            terms[(tuple(cc), tuple(aa))] = v
        return NormalPoly._raw(target, terms)

    def used_pairs(self) -> set:
        out = set()
        for c, a in self.terms:
            for i, (x, y) in enumerate(zip(c, a)):
                if x or y:
                    out.add(self.space.pairs[i])
        return out

    def is_number_graded(self) -> bool:
        """True if every monomial has equal creation and annihilation exponents per pair."""
        return all(c == a for c, a in self.terms)

    # serialization
    def to_json(self) -> list:
        out = []
        for (c, a), v in sorted(self.terms.items()):
            if isinstance(v, Poly):
                raise TypeError("JSON serialization needs scalar coefficients")
            out.append({"creation": list(c), "annihilation": list(a), "coeff": format_scalar(v)})
        return out

    @classmethod
    def from_json(cls, space: OscSpace, data: list) -> "NormalPoly":
        return cls(
            space,
            {(tuple(d["creation"]), tuple(d["annihilation"])): parse_scalar(d["coeff"]) for d in data},
        )

    def __repr__(self):
        return f"NormalPoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (c, a), v in sorted(self.terms.items()):
            mon = []
            for i, e in enumerate(c):
                if e:
                    mon.append(f"ab{self.space.pairs[i]}" + (f"^{e}" if e > 1 else ""))
            for i, e in enumerate(a):
                if e:
                    mon.append(f"a{self.space.pairs[i]}" + (f"^{e}" if e > 1 else ""))
            coeff = str(v) if isinstance(v, Poly) else format_scalar(v)
            parts.append(f"({coeff})" + ("*" + "*".join(mon) if mon else ""))
        return " + ".join(parts)


def normal_mul(x: NormalPoly, y: NormalPoly) -> NormalPoly:
    """Product in the oscillator algebra, returned in normal-ordered form."""
    if x.space != y.space:
        raise ValueError("mismatched oscillator spaces")
    r: dict = {}
    for k1, v1 in x.terms.items():
        for k2, v2 in y.terms.items():
            v12 = _cmul(v1, v2)
            for k, c in _mono_mul(k1, k2):
                val = v12 if c == 1 else _cmul(v12, c)
                s = r.get(k)
                r[k] = val if s is None else _cadd(s, val)
    return NormalPoly._raw(x.space, {k: v for k, v in r.items() if not is_zero(v)})


def _commutator(x: NormalPoly, y: NormalPoly) -> NormalPoly:
    return normal_mul(x, y) - normal_mul(y, x)


def substitute_generators(
    x: NormalPoly,
    mapping: Mapping,
    target: OscSpace | None = None,
    check: bool = True,
) -> NormalPoly:
    """Apply an algebra map given on generators.

    ``mapping`` sends a pair label to ``(image of abar_p, image of a_p)``;
    unmapped pairs go to the same label in ``target``.  Images must satisfy
    the canonical commutation relations, otherwise the map is rejected.
    """
    target = target or x.space
    images_c: list[NormalPoly] = []
    images_a: list[NormalPoly] = []
    for p in x.space.pairs:
        if p in mapping:
            c, a = mapping[p]
        else:
            if p not in target.index:
                raise ValueError(f"no image for pair {p!r}")
            c, a = target.cre(p), target.ann(p)
        c = c if isinstance(c, NormalPoly) else NormalPoly.const(target, c)
        a = a if isinstance(a, NormalPoly) else NormalPoly.const(target, a)
        if c.space != target or a.space != target:
            raise ValueError("images must live in the target space")
        images_c.append(c)
        images_a.append(a)
    if check:
        used = sorted({i for (c, a) in x.terms for i in range(len(c)) if c[i] or a[i]})
        for i in used:
            for j in used:
                want = NormalPoly.const(target, 1 if i == j else 0)
                if _commutator(images_a[i], images_c[j]) != want:
                    raise ValueError("not an automorphism")
                if j > i and (_commutator(images_a[i], images_a[j]) or _commutator(images_c[i], images_c[j])):
                    raise ValueError("not an automorphism")
    pow_cache: dict = {}

    def power(kind, i, e):
        key = (kind, i, e)
        if key not in pow_cache:
            base = images_c[i] if kind == 0 else images_a[i]
            pow_cache[key] = base if e == 1 else normal_mul(power(kind, i, e - 1), base)
        return pow_cache[key]

    result = NormalPoly(target)
    for (c, a), v in x.terms.items():
        term = NormalPoly.const(target, v)
        for i, e in enumerate(c):
            if e:
                term = normal_mul(term, power(0, i, e))
        for i, e in enumerate(a):
            if e:
                term = normal_mul(term, power(1, i, e))
        result = result + term
    return result


class TwistWeights:
    """Geometric weights ``q_p`` (one per pair) and a scalar prefactor."""

    __slots__ = ("weight", "prefactor")

    def __init__(self, weight: Sequence, prefactor=1):
        self.weight = tuple(as_scalar(q) for q in weight)
        self.prefactor = prefactor if isinstance(prefactor, Poly) else as_scalar(prefactor)

    def __repr__(self):
        return f"TwistWeights({[format_scalar(q) for q in self.weight]}, {self.prefactor})"


def fock_trace(x: NormalPoly, w: TwistWeights):
    """Twisted Fock trace ``prefactor * sum_m q^m <m|x|m>`` in closed rational form."""
    if len(w.weight) != len(x.space):
        raise ValueError("twist weight count differs from pair count")
    if any(q == 1 for q in w.weight):
        raise ZeroDivisionError("divergent trace")
    factors = [[] for _ in w.weight]
    one_minus = [1 - q for q in w.weight]

    def factor(p, k):
        f = factors[p]
        while len(f) <= k:
            j = len(f)
            q = w.weight[p]
            f.append(factorial(j) * q**j / one_minus[p] ** (j + 1))
        return f[k]

    total = mpq(0)
    for (c, a), v in x.terms.items():
        if c != a:
            continue
        f = mpq(1)
        for p, k in enumerate(c):
            f *= factor(p, k)
        total = _cadd(total, _cmul(v, f))
    return _cmul(w.prefactor, total)


class FockVector:
    """Sparse vector in the unnormalized monomial basis ``prod abar_p^{m_p} |0>``."""

    __slots__ = ("space", "entries")

    def __init__(self, space: OscSpace, entries: Mapping | None = None):
        self.space = space
        self.entries = {} if entries is None else {k: v for k, v in entries.items() if not is_zero(v)}

    @classmethod
    def vacuum(cls, space: OscSpace) -> "FockVector":
        return cls(space, {(0,) * len(space): mpq(1)})

    def __add__(self, other):
        r = dict(self.entries)
        for k, v in other.entries.items():
            r[k] = _cadd(r.get(k, mpq(0)), v)
        return FockVector(self.space, r)

    def scale(self, c):
        return FockVector(self.space, {k: _cmul(c, v) for k, v in self.entries.items()})

    def __eq__(self, other):
        return isinstance(other, FockVector) and self.space == other.space and self.entries == other.entries

    def __bool__(self):
        return bool(self.entries)

    def __repr__(self):
        return f"FockVector({self.entries})"


def apply_to_fock(x: NormalPoly, v: FockVector) -> FockVector:
    """Act with ``x`` on ``v``: ``abar_p|m> = |m+e_p>``, ``a_p|m> = m_p |m-e_p>``."""
    if x.space != v.space:
        raise ValueError("mismatched oscillator spaces")
    r: dict = {}
    for m, vm in v.entries.items():
        for (c, a), coeff in x.terms.items():
            f = 1
            for mp, ap in zip(m, a):
                if ap > mp:
                    f = 0
                    break
                for s in range(ap):
                    f *= mp - s
            if f == 0:
                continue
            key = tuple(mp - ap + cp for mp, ap, cp in zip(m, a, c))
            val = _cmul(_cmul(coeff, vm), f)
            r[key] = _cadd(r[key], val) if key in r else val
    return FockVector(x.space, r)


def fock_basis(npairs: int, cutoff: int) -> list[tuple]:
    return list(itertools.product(range(cutoff + 1), repeat=npairs))


def truncated_matrix(x: NormalPoly, cutoff: int) -> list[list]:
    """Matrix of ``x`` on occupations ``m_p <= cutoff``; leaking components are dropped."""
    basis = fock_basis(len(x.space), cutoff)
    pos = {m: i for i, m in enumerate(basis)}
    n = len(basis)
    mat = [[mpq(0)] * n for _ in range(n)]
    for j, m in enumerate(basis):
        out = apply_to_fock(x, FockVector(x.space, {m: mpq(1)}))
        for k, val in out.entries.items():
            i = pos.get(k)
            if i is not None:
                mat[i][j] = val
    return mat


def fock_trace_float(x: NormalPoly, w: TwistWeights, cutoff: int = 60) -> complex:
    """Floating partial sum ``prefactor * sum_{m_p <= cutoff} q^m <m|x|m>`` (oracle only)."""
    if len(w.weight) != len(x.space):
        raise ValueError("twist weight count differs from pair count")
    q = [float(v) for v in w.weight]
    total = 0.0
    for (c, a), v in x.terms.items():
        if c != a:
            continue
        v = complex(float(v.constant_value())) if isinstance(v, Poly) else float(v)
        f = 1.0
        for p, k in enumerate(c):
            s = 0.0
            for m in range(k, cutoff + 1):
                s += q[p] ** m * math.perm(m, k)
            f *= s
        total += v * f
    return complex(float(w.prefactor)) * total
