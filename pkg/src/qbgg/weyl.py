"""Root systems, Weyl groups, shortest coset representatives and characters.

Weights are vectors in the epsilon basis (length ``n`` for gl_n, ``r`` for
B/C/D).  A Weyl group element is a signed permutation ``(signs, sigma)``
acting by ``(w v)_i = signs_i * v_{sigma^{-1}(i)}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .coeff import TauPoint, as_scalar, format_scalar, mpq

__all__ = [
    "AlgebraType",
    "Case",
    "SignedPerm",
    "CosetElement",
    "positive_roots",
    "rho",
    "weyl_group",
    "weyl_length",
    "enumerate_cosets",
    "dot_action",
    "weyl_character",
    "weyl_denominator_sides",
    "truncated_bgg_character",
    "coset_character",
    "weyl_dimension",
    "is_dominant_integral",
    "sigma_mu",
]


@dataclass(frozen=True)
class AlgebraType:
    """``family`` in A/B/C/D; ``rank`` is n for gl_n and r otherwise."""

    family: str
    rank: int

    def __post_init__(self):
        f, r = self.family, self.rank
        if f not in "ABCD" or len(f) != 1:
            raise ValueError(f"unknown family {f!r}")
        lo = {"A": 2, "B": 2, "C": 1, "D": 2}[f]
        if r < lo:
            raise ValueError(f"type {f} needs rank >= {lo}")

    @property
    def K(self) -> int:
        """Dimension of the defining representation."""
        return {"A": self.rank, "B": 2 * self.rank + 1, "C": 2 * self.rank, "D": 2 * self.rank}[self.family]

    @property
    def kappa(self) -> mpq:
        r = self.rank
        return {"A": mpq(0), "B": mpq(2 * r - 1, 2), "C": mpq(r + 1), "D": mpq(r - 1)}[self.family]

    @property
    def dim(self) -> int:
        """Length of weight vectors."""
        return self.rank

    def eps(self) -> list[int]:
        """epsilon signs of the defining basis (symplectic for C)."""
        if self.family == "C":
            return [1] * self.rank + [-1] * self.rank
        return [1] * self.K

    def __str__(self):
        return f"{self.family}{self.rank}"


@dataclass(frozen=True)
class Case:
    """Which fundamental family: ``rect`` (A, index ``a``), ``spinor`` (C, or D with ``sector``), ``vector`` (B/D)."""

    kind: str
    a: int | None = None
    sector: int | None = None

    def __str__(self):
        if self.kind == "rect":
            return f"rect(a={self.a})"
        if self.kind == "spinor" and self.sector is not None:
            return f"spinor{'+' if self.sector > 0 else '-'}"
        return self.kind


def check_case(alg: AlgebraType, case: Case) -> None:
    f, r = alg.family, alg.rank
    if f == "A":
        if case.kind != "rect" or case.a is None or not 1 <= case.a <= r - 1:
            raise ValueError(f"type A needs case rect with 1 <= a <= {r - 1}")
    elif f == "C":
        if case.kind != "spinor":
            raise ValueError("type C supports only the spinor (last fundamental) case")
    elif f == "D":
        if case.kind == "spinor":
            if case.sector not in (1, -1):
                raise ValueError("D spinor case needs sector +1 or -1")
        elif case.kind != "vector":
            raise ValueError("type D supports the spinor and vector cases")
    elif f == "B":
        if case.kind != "vector":
            raise ValueError("type B supports only the vector case")


@dataclass(frozen=True)
class SignedPerm:
    """Weyl group element; ``src[i] = sigma^{-1}(i)`` (0-based)."""

    signs: tuple
    src: tuple

    @classmethod
    def from_sigma(cls, signs: Sequence[int], sigma: Sequence[int]) -> "SignedPerm":
        """``sigma`` given 1-based as the list (sigma(1), ..., sigma(r))."""
        src = [0] * len(sigma)
        for i, s in enumerate(sigma):
            src[s - 1] = i
        return cls(tuple(signs), tuple(src))

    @classmethod
    def identity(cls, r: int) -> "SignedPerm":
        return cls((1,) * r, tuple(range(r)))

    def apply(self, v: Sequence) -> tuple:
        return tuple(s * v[j] for s, j in zip(self.signs, self.src))

    def compose(self, other: "SignedPerm") -> "SignedPerm":
        """``self * other`` (apply ``other`` first)."""
        signs = tuple(s * other.signs[j] for s, j in zip(self.signs, self.src))
        src = tuple(other.src[j] for j in self.src)
        return SignedPerm(signs, src)

    def negatives(self) -> int:
        return sum(1 for s in self.signs if s < 0)


def positive_roots(alg: AlgebraType) -> list[tuple]:
    n = alg.dim
    roots = []

    def e(i, j=None, sj=1, ci=1):
        v = [0] * n
        v[i] += ci
        if j is not None:
            v[j] += sj
        return tuple(v)

    for i in range(n):
        for j in range(i + 1, n):
            roots.append(e(i, j, -1))
            if alg.family != "A":
                roots.append(e(i, j, 1))
    if alg.family == "B":
        roots += [e(i) for i in range(n)]
    if alg.family == "C":
        roots += [e(i, ci=2) for i in range(n)]
    return roots


def rho(alg: AlgebraType) -> tuple:
    n = alg.dim
    f = alg.family
    if f == "A":
        return tuple(mpq(n - 1, 2) - i for i in range(n))
    if f == "C":
        return tuple(mpq(n - i) for i in range(n))
    if f == "D":
        return tuple(mpq(n - 1 - i) for i in range(n))
    return tuple(mpq(2 * (n - i) - 1, 2) for i in range(n))


def weyl_group(alg: AlgebraType) -> list[SignedPerm]:
    n = alg.dim
    perms = list(itertools.permutations(range(n)))
    if alg.family == "A":
        return [SignedPerm((1,) * n, p) for p in perms]
    out = []
    for signs in itertools.product((1, -1), repeat=n):
        if alg.family == "D" and signs.count(-1) % 2:
            continue
        out.extend(SignedPerm(signs, p) for p in perms)
    return out


def weyl_length(w: SignedPerm, alg: AlgebraType) -> int:
    pos = set(positive_roots(alg))
    return sum(1 for a in pos if w.apply(a) not in pos)


def check_element(w: SignedPerm, alg: AlgebraType) -> None:
    if len(w.signs) != alg.dim:
        raise ValueError("Weyl element has the wrong size")
    if alg.family == "A" and w.negatives():
        raise ValueError("type A Weyl elements carry no sign changes")
    if alg.family == "D" and w.negatives() % 2:
        raise ValueError("type D Weyl elements need an even number of sign changes")


def dot_action(w: SignedPerm, lam: Sequence, alg: AlgebraType) -> tuple:
    """``w(lam + rho) - rho``."""
    check_element(w, alg)
    rh = rho(alg)
    v = [as_scalar(l) + p for l, p in zip(lam, rh)] if not _symbolic(lam) else [l + p for l, p in zip(lam, rh)]
    wv = w.apply(v)
    return tuple(a - p for a, p in zip(wv, rh))


def _symbolic(lam) -> bool:
    from .coeff import Poly

    return any(isinstance(l, Poly) for l in lam)


def sigma_mu(mu: Sequence[int]) -> list[int]:
    """The permutation attached to a sign vector, returned as (sigma(1), ..., sigma(r))."""
    r = len(mu)
    inv = []
    for i in range(r):
        if mu[i] == 1:
            inv.append(sum(1 for k in range(i + 1) if mu[k] == 1))
        else:
            inv.append(r + 1 - sum(1 for k in range(i + 1) if mu[k] == -1))
    sigma = [0] * r
    for i, s in enumerate(inv):
        sigma[s - 1] = i + 1
    return sigma


@dataclass
class CosetElement:
    """Shortest coset representative with its length and vacuum highest weight."""

    tag: str
    label: tuple
    length: int
    weyl: SignedPerm
    base_weight: tuple
    hw_formula: Callable = field(repr=False)

    @property
    def sign(self) -> int:
        return -1 if self.length % 2 else 1

    def highest_weight(self, t) -> tuple:
        return tuple(self.hw_formula(t))

    def name(self) -> str:
        if self.tag == "SubsetI":
            return "I={" + ",".join(map(str, self.label)) + "}"
        if self.tag == "SignVector":
            return "mu=(" + ",".join("+" if m > 0 else "-" for m in self.label) + ")"
        k, primed = self.label
        return f"k={k}'" if primed else f"k={k}"

    def to_json(self, t) -> dict:
        return {
            "tag": self.name(),
            "length": self.length,
            "hw": [format_scalar(h) for h in self.highest_weight(t)],
        }


def _cosets_A(n: int, a: int) -> list[CosetElement]:
    out = []
    for I in itertools.combinations(range(1, n + 1), a):
        Ibar = [j for j in range(1, n + 1) if j not in I]
        sigma = list(I) + Ibar
        w = SignedPerm.from_sigma([1] * n, sigma)
        length = sum(1 for k in I for l in Ibar if k > l)

        def hw(t, I=I, Ibar=Ibar):
            return [
                (t + sum(1 for j in Ibar if j < k)) if k in I else -sum(1 for i in I if i > k)
                for k in range(1, n + 1)
            ]

        out.append(CosetElement("SubsetI", tuple(I), length, w, tuple([1] * a + [0] * (n - a)), hw))
    return out


def _mu_vectors(r: int):
    return [tuple(m) for m in itertools.product((1, -1), repeat=r)]


def _cosets_C(r: int) -> list[CosetElement]:
    out = []
    for mu in _mu_vectors(r):
        w = SignedPerm.from_sigma(mu, sigma_mu(mu))
        length = sum(r - i for i in range(r) if mu[i] == -1)

        def hw(t, mu=mu):
            return [
                mu[i] * (t + (r - i) * (mu[i] == -1) + sum(1 for k in range(i + 1) if mu[k] == -1))
                for i in range(r)
            ]

        out.append(CosetElement("SignVector", mu, length, w, (1,) * r, hw))
    return out


def _cosets_Dspin(r: int, sector: int) -> list[CosetElement]:
    out = []
    for mu in _mu_vectors(r):
        parity = 1 if mu.count(-1) % 2 == 0 else -1
        if parity != sector:
            continue
        signs = list(mu)
        if parity == -1:
            signs[signs.index(-1)] = 1
        w = SignedPerm.from_sigma(signs, sigma_mu(mu))
        length = sum(r - 1 - i for i in range(r) if mu[i] == -1)

        def hw(t, mu=mu):
            return [
                mu[i] * (t + (r - i - 2) * (mu[i] == -1) + sum(1 for k in range(i + 1) if mu[k] == -1))
                for i in range(r)
            ]

        out.append(CosetElement("SignVector", mu, length, w, (1,) * (r - 1) + (sector,), hw))
    return out


def _cosets_BD(alg: AlgebraType) -> list[CosetElement]:
    r, K = alg.rank, alg.K
    out = []
    for primed in (False, True):
        for k in range(1, r + 1):
            sigma = [k] + [i for i in range(1, k)] + list(range(k + 1, r + 1))
            signs = [1] * r
            if primed:
                if alg.family == "B":
                    signs[k - 1] = -1
                elif k < r:
                    signs[k - 1] = signs[r - 1] = -1
                else:
                    signs[r - 2] = signs[r - 1] = -1
            w = SignedPerm.from_sigma(signs, sigma)
            pos = K + 1 - k if primed else k
            length = pos - 2 if primed else k - 1

            def hw(t, k=k, primed=primed, pos=pos):
                top = (-t - pos + 2) if primed else (t + k - 1)
                return [-1] * (k - 1) + [top] + [0] * (r - k)

            out.append(CosetElement("BDIndex", (k, primed), length, w, (1,) + (0,) * (r - 1), hw))
    return out


def enumerate_cosets(alg: AlgebraType, case: Case) -> list[CosetElement]:
    check_case(alg, case)
    f = alg.family
    if f == "A":
        return _cosets_A(alg.rank, case.a)
    if f == "C":
        return _cosets_C(alg.rank)
    if f == "D" and case.kind == "spinor":
        return _cosets_Dspin(alg.rank, case.sector)
    return _cosets_BD(alg)


def base_weight(alg: AlgebraType, case: Case) -> tuple:
    return enumerate_cosets(alg, case)[0].base_weight


def _exp_weight(tau: TauPoint, mu: Sequence) -> mpq:
    return tau.monomial({i: m for i, m in enumerate(mu)})


def _as_tau(tau) -> TauPoint:
    return tau if isinstance(tau, TauPoint) else TauPoint.from_values(tau)


def _root_name(a: tuple) -> str:
    parts = []
    for i, c in enumerate(a):
        if c:
            s = "+" if c > 0 else "-"
            parts.append(f"{s}{abs(c) if abs(c) != 1 else ''}e{i + 1}")
    return "".join(parts).lstrip("+")


def weyl_denominator_sides(alg: AlgebraType, tau) -> tuple[mpq, mpq]:
    """Both sides of the denominator identity at ``tau``."""
    tau = _as_tau(tau)
    rh = rho(alg)
    lhs = mpq(0)
    for w in weyl_group(alg):
        mu = tuple(a - b for a, b in zip(w.apply(rh), rh))
        lhs += (-1) ** weyl_length(w, alg) * _exp_weight(tau, mu)
    rhs = mpq(1)
    for a in positive_roots(alg):
        rhs *= 1 - _exp_weight(tau, [-c for c in a])
    return lhs, rhs


def is_dominant_integral(alg: AlgebraType, lam: Sequence) -> bool:
    lam = [as_scalar(l) for l in lam]
    n = alg.dim
    simple = [tuple((1 if k == i else -1 if k == i + 1 else 0) for k in range(n)) for i in range(n - 1)]
    if alg.family == "B":
        simple.append(tuple(1 if k == n - 1 else 0 for k in range(n)))
    elif alg.family == "C":
        simple.append(tuple(2 if k == n - 1 else 0 for k in range(n)))
    elif alg.family == "D":
        simple.append(tuple(1 if k >= n - 2 else 0 for k in range(n)))
    for a in simple:
        aa = sum(c * c for c in a)
        pair = 2 * sum(l * c for l, c in zip(lam, a)) / aa
        if pair.denominator != 1 or pair < 0:
            return False
    if alg.family == "A":
        return all((l - lam[0]).denominator == 1 for l in lam)
    return True


def weyl_character(alg: AlgebraType, lam: Sequence, tau) -> mpq:
    """Character of the irreducible module ``L_lam`` at the diagonal point ``tau``."""
    tau = _as_tau(tau)
    lam = [as_scalar(l) for l in lam]
    if not is_dominant_integral(alg, lam):
        raise ValueError("weight is not dominant integral")
    den = mpq(1)
    for a in positive_roots(alg):
        f = 1 - _exp_weight(tau, [-c for c in a])
        if f == 0:
            raise ZeroDivisionError(f"degenerate twist: denominator of root {_root_name(a)} vanishes")
        den *= f
    rh = rho(alg)
    lr = [l + p for l, p in zip(lam, rh)]
    num = mpq(0)
    for w in weyl_group(alg):
        mu = tuple(a - b for a, b in zip(w.apply(lr), rh))
        num += (-1) ** weyl_length(w, alg) * _exp_weight(tau, mu)
    return num / den


def weyl_dimension(alg: AlgebraType, lam: Sequence) -> int:
    lam = [as_scalar(l) for l in lam]
    if not is_dominant_integral(alg, lam):
        raise ValueError("weight is not dominant integral")
    rh = rho(alg)
    num = mpq(1)
    den = mpq(1)
    for a in positive_roots(alg):
        num *= sum((l + p) * c for l, p, c in zip(lam, rh, a))
        den *= sum(p * c for p, c in zip(rh, a))
    d = num / den
    assert d.denominator == 1
    return int(d)


def coset_character(alg: AlgebraType, case: Case, el: CosetElement, t, tau) -> mpq:
    """Closed-form character of the Fock module attached to ``el`` (no sign)."""
    tau = _as_tau(tau)
    t = as_scalar(t)
    f, r = alg.family, alg.rank
    v = tau.values
    hw = el.highest_weight(t)
    num = _exp_weight(tau, hw)
    den = mpq(1)
    if f == "A":
        I = el.label
        for k in I:
            for l in range(1, r + 1):
                if l in I:
                    continue
                den *= (1 - v[k - 1] / v[l - 1]) if k > l else (1 - v[l - 1] / v[k - 1])
    elif f == "C" or (f == "D" and case.kind == "spinor"):
        mu = el.label
        for i in range(r):
            for j in range(i if f == "C" else i + 1, r):
                den *= 1 - 1 / (v[i] * v[j] ** (mu[i] * mu[j]))
    else:
        k, primed = el.label
        kk = k - 1
        if f == "B":
            den *= 1 - 1 / v[kk]
        for l in range(r):
            if l < kk:
                den *= 1 - v[kk] / v[l]
            elif l > kk:
                den *= 1 - v[l] / v[kk]
            if l != kk:
                den *= 1 - 1 / (v[kk] * v[l])
        if primed:
            # closed form numerator tau_1^-1 ... tau_{k-1}^-1 tau_k^{k+1-2r-t} (D) or ^{k-2r-t} (B)
            e = (k - 2 * r - t) if f == "B" else (k + 1 - 2 * r - t)
            num = tau.monomial({**{i: -1 for i in range(kk)}, kk: e})
    if den == 0:
        raise ZeroDivisionError(f"degenerate twist for coset {el.name()}")
    return num / den


def truncated_bgg_character(alg: AlgebraType, case: Case, t, tau) -> mpq:
    """Alternating sum over shortest coset representatives of the Fock-module characters."""
    tau = _as_tau(tau)
    return sum(
        (el.sign * coset_character(alg, case, el, t, tau) for el in enumerate_cosets(alg, case)),
        mpq(0),
    )
