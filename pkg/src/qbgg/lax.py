"""R-matrices, oscillator Lax matrices and exact algebra-level checks.

Oscillator pairs carry ambient labels ``(u, v)`` with 1-based indices of the
auxiliary space; pair ``(u, v)`` has creation operator ``abar_{u,v}`` and
annihilation operator ``a_{v,u}``.  Primed indices are ``i' = K + 1 - i``.
Lax entries are ``NormalPoly`` values whose coefficients are ``Poly`` in the
spectral variable ``x`` (and possibly the label ``t``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .coeff import Poly, as_scalar, mpq
from .oscillator import NormalPoly, OscSpace, normal_mul, substitute_generators
from .report import Report, timed
from .weyl import AlgebraType

__all__ = [
    "LaxMatrix",
    "RMatrix",
    "SignedPermMatrix",
    "construct_lax",
    "conjugate_and_ph",
    "similarity_map",
    "rtt_check",
    "lie_algebra_check",
    "lax_factorisation_check",
    "renormalized_limit_check",
    "r_matrix_properties",
    "highest_weight_defects",
    "FAMILIES",
]

X = Poly.var("x")
T = Poly.var("t")
HALF = mpq(1, 2)


def _norm(v):
    if isinstance(v, Poly) and v.is_constant():
        return v.constant_value()
    return v


# matrix helpers (lists of lists of NormalPoly)

def mzero(space: OscSpace, n: int, m: int | None = None):
    return [[NormalPoly(space) for _ in range(n if m is None else m)] for _ in range(n)]


def meye(space: OscSpace, n: int, c=1):
    out = mzero(space, n)
    for i in range(n):
        out[i][i] = NormalPoly.const(space, c)
    return out


def mmul(A, B):
    n, k, m = len(A), len(B), len(B[0]) if B else 0
    sp = (A[0][0] if A and A[0] else B[0][0]).space
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            s = NormalPoly(sp)
            for l in range(k):
                if A[i][l].terms and B[l][j].terms:
                    s = s + normal_mul(A[i][l], B[l][j])
            row.append(s)
        out.append(row)
    return out


def madd(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def msub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mscale(A, c):
    return [[a.scale(c) for a in row] for row in A]


def mmap(A, f: Callable):
    return [[f(a) for a in row] for row in A]


def mT(A):
    return [list(r) for r in zip(*A)]


def mblocks(rows):
    out = []
    for brow in rows:
        for i in range(len(brow[0])):
            out.append([e for blk in brow for e in blk[i]])
    return out


def mdiag_right(A, d: Sequence):
    return [[a.scale(d[j]) for j, a in enumerate(row)] for row in A]


def mdiag_left(A, d: Sequence):
    return [[a.scale(d[i]) for a in row] for i, row in enumerate(A)]


def term_count(p: NormalPoly) -> int:
    return sum(len(v.terms) if isinstance(v, Poly) else 1 for v in p.terms.values())


def mdefect(A, B) -> int:
    return sum(term_count(a - b) for ra, rb in zip(A, B) for a, b in zip(ra, rb))


def _subs_x(p: NormalPoly, expr) -> NormalPoly:
    def f(v):
        if isinstance(v, Poly):
            return _norm(v.subs({"x": expr}))
        return v

    return p.map_coeffs(f)


def _map_entries(M, mapping, target, check=True):
    """Apply a generator map to every entry, validating it once."""
    if check and mapping:
        src = M[0][0].space
        probe = NormalPoly.monomial(src, {p: 1 for p in src.pairs}, {})
        substitute_generators(probe, mapping, target, check=True)
    return [[substitute_generators(e, mapping, target, check=False) for e in row] for row in M]


# signed permutation matrices

class SignedPermMatrix:
    """Monomial matrix with ``B e_j = signs[j] e_{perm[j]}`` (0-based)."""

    def __init__(self, perm: Sequence[int], signs: Sequence[int] | None = None):
        self.perm = tuple(perm)
        self.signs = tuple(signs) if signs is not None else (1,) * len(self.perm)
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError("not a permutation: every row and column needs exactly one nonzero entry")
        if any(s not in (1, -1) for s in self.signs) or len(self.signs) != len(self.perm):
            raise ValueError("signs must be +1 or -1")

    @classmethod
    def identity(cls, K: int) -> "SignedPermMatrix":
        return cls(range(K))

    @classmethod
    def from_dense(cls, rows) -> "SignedPermMatrix":
        K = len(rows)
        perm = [None] * K
        signs = [1] * K
        for j in range(K):
            nz = [i for i in range(K) if rows[i][j] != 0]
            if len(nz) != 1 or rows[nz[0]][j] not in (1, -1):
                raise ValueError("exactly one entry +-1 per column required")
            perm[j] = nz[0]
            signs[j] = int(rows[nz[0]][j])
        return cls(perm, signs)

    def __len__(self):
        return len(self.perm)

    def __eq__(self, other):
        return isinstance(other, SignedPermMatrix) and (self.perm, self.signs) == (other.perm, other.signs)

    def __hash__(self):
        return hash((self.perm, self.signs))

    def __repr__(self):
        return f"SignedPermMatrix({self.perm}, {self.signs})"

    def dense(self):
        K = len(self.perm)
        out = [[0] * K for _ in range(K)]
        for j, (i, s) in enumerate(zip(self.perm, self.signs)):
            out[i][j] = s
        return out

    def compose(self, other: "SignedPermMatrix") -> "SignedPermMatrix":
        """Matrix product ``self @ other``."""
        perm = [self.perm[other.perm[j]] for j in range(len(self))]
        signs = [other.signs[j] * self.signs[other.perm[j]] for j in range(len(self))]
        return SignedPermMatrix(perm, signs)

    def inverse(self) -> "SignedPermMatrix":
        K = len(self)
        perm = [0] * K
        signs = [1] * K
        for j, (i, s) in enumerate(zip(self.perm, self.signs)):
            perm[i] = j
            signs[i] = s
        return SignedPermMatrix(perm, signs)

    def conjugate(self, M):
        """``B M B^{-1}`` for a square matrix of ring elements."""
        K = len(self)
        out = [[None] * K for _ in range(K)]
        for i in range(K):
            for j in range(K):
                s = self.signs[i] * self.signs[j]
                out[self.perm[i]][self.perm[j]] = M[i][j] if s == 1 else -M[i][j]
        return out

    def preserves_form(self, alg: AlgebraType) -> bool:
        """True if the matrix commutes with P and Q (invariance of the R-matrix)."""
        if alg.family == "A":
            return True
        K = alg.K
        eps = alg.eps()
        for j in range(K):
            jp = K - 1 - j
            i, s = self.perm[j], self.signs[j]
            ip, sp = self.perm[jp], self.signs[jp]
            if ip != K - 1 - i or s * sp * eps[j] != eps[i]:
                return False
        return True


def b_subset(n: int, I: Iterable[int]) -> SignedPermMatrix:
    """``B_I e_i = e_{sigma_I(i)}`` with ``sigma_I`` = sorted I then sorted complement."""
    sigma = sigma_subset(n, I)
    return SignedPermMatrix([s - 1 for s in sigma])


def sigma_subset(n: int, I: Iterable[int]) -> list[int]:
    I = sorted(set(I))
    if not I or any(i < 1 or i > n for i in I) or len(I) >= n:
        raise ValueError("subset must be proper, nonempty and inside 1..n")
    return I + [j for j in range(1, n + 1) if j not in I]


def b_mu(alg: AlgebraType, mu: Sequence[int]) -> SignedPermMatrix:
    """Product of the elementary reflections ``B_i`` over ``mu_i = -1``."""
    K = alg.K
    perm = list(range(K))
    signs = [1] * K
    for i, m in enumerate(mu):
        if m == -1:
            ip = K - 1 - i
            perm[i], perm[ip] = ip, i
            if alg.family == "C":
                signs[i] = -1
    return SignedPermMatrix(perm, signs)


def b_hat(alg: AlgebraType, idx: int) -> SignedPermMatrix:
    """Weyl representative moving the first basis vector to position ``idx`` (1-based)."""
    K = alg.K
    r = alg.rank
    perm = list(range(K))

    def swap(a, b):
        perm[a - 1], perm[b - 1] = b - 1, a - 1

    if idx == 1:
        pass
    elif idx <= r:
        swap(1, idx)
        swap(K, K + 1 - idx)
    else:
        m = K + 1 - idx
        if m < 1 or m > r:
            raise ValueError("index outside the BD index set")
        swap(1, idx)
        if m != 1:
            swap(K, m)
        for j in range(2, r + 1):
            if j != m:
                swap(j, K + 1 - j)
    return SignedPermMatrix(perm)


# R-matrices

class RMatrix:
    """``z + P`` for type A and ``z(z + kappa) + (z + kappa) P - z Q`` otherwise."""

    def __init__(self, alg: AlgebraType):
        self.alg = alg
        self.K = alg.K
        self.eps = alg.eps()

    @property
    def kappa(self):
        return self.alg.kappa

    def weights(self, u):
        """Coefficients ``(f, g, h)`` of ``I``, ``P`` and ``Q`` at argument ``u``."""
        if self.alg.family == "A":
            return u, Poly.const(1), None
        k = self.kappa
        return u * (u + k), u + k, -u

    def dense(self, u) -> dict:
        """Sparse ``{((i,k),(j,l)): coefficient}`` with 0-based indices."""
        K = self.K
        f, g, h = self.weights(u)
        out: dict = {}

        def add(key, v):
            s = out.get(key)
            out[key] = v if s is None else s + v

        for i in range(K):
            for k in range(K):
                add(((i, k), (i, k)), f)
                add(((i, k), (k, i)), g)
                if h is not None and k == K - 1 - i:
                    for m in range(K):
                        add(((i, k), (m, K - 1 - m)), h * (self.eps[i] * self.eps[m]))
        return {k: v for k, v in out.items() if v}

    def to_json(self, u=None):
        u = Poly.var("z") if u is None else Poly.coerce(u)
        return {
            "alg": str(self.alg),
            "entries": [
                {"row": list(a), "col": list(b), "val": str(v)} for (a, b), v in sorted(self.dense(u).items())
            ],
        }


def _rmul(A: dict, B: dict) -> dict:
    out: dict = {}
    byrow: dict = {}
    for (r, c), v in B.items():
        byrow.setdefault(r, []).append((c, v))
    for (r, c), v in A.items():
        for c2, w in byrow.get(c, ()):
            key = (r, c2)
            s = out.get(key)
            out[key] = v * w if s is None else s + v * w
    return {k: v for k, v in out.items() if v}


# Lax matrices

@dataclass
class LaxMatrix:
    alg: AlgebraType
    family: str
    params: dict
    space: OscSpace
    entries: list
    degenerate: bool = False
    qtwist: dict | None = None
    const_twist: list | None = None

    @property
    def K(self) -> int:
        return len(self.entries)

    @property
    def degree(self) -> int:
        d = 0
        for row in self.entries:
            for e in row:
                for v in e.terms.values():
                    if isinstance(v, Poly):
                        d = max(d, v.degrees("x")[1])
        return d

    def coeff(self, k: int):
        """Coefficient matrix of ``x^k`` (entries free of ``x``)."""
        out = []
        for row in self.entries:
            out.append([e.coefficients("x").get(k, NormalPoly(self.space)).map_coeffs(_norm) for e in row])
        return out

    def at(self, expr) -> list:
        """Entries with ``x`` replaced by a scalar or polynomial."""
        return mmap(self.entries, lambda e: _subs_x(e, expr))

    def shifted(self, c) -> "LaxMatrix":
        return self.with_entries(self.at(X + c))

    def with_entries(self, entries, space=None, **kw) -> "LaxMatrix":
        d = dict(
            alg=self.alg,
            family=self.family,
            params=self.params,
            space=space or self.space,
            entries=entries,
            degenerate=self.degenerate,
            qtwist=self.qtwist,
            const_twist=self.const_twist,
        )
        d.update(kw)
        return LaxMatrix(**d)

    def embed(self, target: OscSpace) -> "LaxMatrix":
        return self.with_entries(mmap(self.entries, lambda e: e.embed(target)), space=target)

    def subs_params(self, values: Mapping) -> "LaxMatrix":
        return self.with_entries(mmap(self.entries, lambda e: e.subs_params(values)))

    def generators(self):
        """``F_ij``: transpose of the linear coefficient for quadratic, of the free term for linear."""
        if self.degree == 2:
            return mT(self.coeff(1))
        return mT(self.coeff(0))

    def __eq__(self, other):
        return isinstance(other, LaxMatrix) and self.space == other.space and self.entries == other.entries

    def to_json(self) -> dict:
        coeffs = {}
        for k in range(self.degree + 1):
            C = self.coeff(k)
            coeffs[f"x^{k}"] = [
                {"row": i + 1, "col": j + 1, "val": C[i][j].to_json()}
                for i in range(self.K)
                for j in range(self.K)
                if C[i][j].terms
            ]
        return {
            "alg": str(self.alg),
            "family": self.family,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "pairs": [list(p) for p in self.space.pairs],
            "coeffs": coeffs,
        }


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    return str(v)


def _coerce_t(t):
    if t is None:
        return T
    return t if isinstance(t, Poly) else as_scalar(t)


def _vec_ops(space, labels):
    cre = [space.cre(p) for p in labels]
    ann = [space.ann(p) for p in labels]
    return cre, ann


def _pair_q(exps: dict) -> dict:
    return {k: v for k, v in exps.items() if v}


# type A

def _space_rect(n, a):
    return [(i, j) for i in range(1, a + 1) for j in range(a + 1, n + 1)]


def _blocks_rect(sp, n, a):
    Ab = [[sp.cre((i, j)) for j in range(a + 1, n + 1)] for i in range(1, a + 1)]
    A = [[sp.ann((i, j)) for i in range(1, a + 1)] for j in range(a + 1, n + 1)]
    return Ab, A


def _lax_a_verma(n, lam):
    alg = AlgebraType("A", n)
    lam = [l if isinstance(l, Poly) else as_scalar(l) for l in lam]
    if len(lam) != n:
        raise ValueError("lambda needs n entries")
    sp = OscSpace([(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])
    N = mzero(sp, n)
    for i in range(n):
        for j in range(i + 1, n):
            N[i][j] = sp.cre((i + 1, j + 1))
    U = msub(meye(sp, n), N)
    Uinv = meye(sp, n)
    Nk = meye(sp, n)
    for _ in range(n - 1):
        Nk = mmul(Nk, N)
        Uinv = madd(Uinv, Nk)
    D = mzero(sp, n)
    for i in range(n):
        D[i][i] = NormalPoly.const(sp, X + lam[i] - i)
        for c in range(i):
            e = -sp.ann((c + 1, i + 1))
            for k in range(i + 1, n):
                e = e + sp.cre((i + 1, k + 1)) * sp.ann((c + 1, k + 1))
            D[i][c] = e
    L = mmul(mmul(Uinv, D), U)
    return LaxMatrix(alg, "A-verma", {"n": n, "lam": list(lam)}, sp, L)


def _lax_a_rect(n, a, t):
    if not 1 <= a <= n - 1:
        raise ValueError("a must lie in [1, n-1]")
    t = _coerce_t(t)
    alg = AlgebraType("A", n)
    sp = OscSpace(_space_rect(n, a))
    Ab, A = _blocks_rect(sp, n, a)
    AbA = mmul(Ab, A)
    AAb = mmul(A, Ab)
    m = n - a
    tl = msub(meye(sp, a, X + t), AbA)
    tr = mscale(msub(mscale(Ab, t + a), mmul(Ab, AAb)), -1)
    bl = mscale(A, -1)
    br = madd(meye(sp, m, X - a), AAb)
    L = mblocks([[tl, tr], [bl, br]])
    return LaxMatrix(alg, "A-rect", {"n": n, "a": a, "t": t}, sp, L)


def _ph_a(n, I):
    """Sign change on pairs ``i <= a < j`` whose order is reversed by ``sigma_I``."""
    sigma = sigma_subset(n, I)
    a = len(set(I))
    return {
        (i, j): ("ann", -1, "cre", 1)
        for i in range(1, a + 1)
        for j in range(a + 1, n + 1)
        if sigma[j - 1] < sigma[i - 1]
    }


def _ph_to_mapping(space, rule: dict, target=None, relabel=None):
    """Build a generator map from ``{pair: (cre->kind, sign, ann->kind, sign)}``."""
    target = target or space
    out = {}
    for p in space.pairs:
        q = relabel(p) if relabel else p
        s = rule.get(p)
        if s is None:
            out[p] = (target.cre(q), target.ann(q))
            continue
        k1, s1, k2, s2 = s
        g1 = target.cre(q) if k1 == "cre" else target.ann(q)
        g2 = target.cre(q) if k2 == "cre" else target.ann(q)
        out[p] = (g1.scale(s1), g2.scale(s2))
    return out


def _i_ph(n, I, pairs, bar=False):
    """Relabel ``(i, j) -> (sigma i, sigma j)``; swap roles when the order flips."""
    sigma = sigma_subset(n, I)
    rule = {}
    for p in pairs:
        u, v = p
        flip = sigma[u - 1] < sigma[v - 1] if bar else sigma[v - 1] < sigma[u - 1]
        if flip:
            rule[p] = ("ann", -1, "cre", 1) if bar else ("ann", 1, "cre", -1)
    return rule, (lambda p: (sigma[p[0] - 1], sigma[p[1] - 1]))


def _a_pairs_I(n, I):
    I = sorted(set(I))
    Ib = [j for j in range(1, n + 1) if j not in I]
    return [(i, j) for i in I for j in Ib]


def _a_qtwist(pairs):
    return {p: _pair_q({max(p) - 1: 1, min(p) - 1: -1}) for p in pairs}


def _lax_a_I(n, I, t, ph="A"):
    I = sorted(set(I))
    a = len(I)
    base = _lax_a_rect(n, a, t)
    B = b_subset(n, I)
    if ph == "A":
        rule = _ph_a(n, I)
        mapping = _ph_to_mapping(base.space, rule)
        L = conjugate_and_ph(base, B, mapping)
        fam = "A-I"
    elif ph == "I":
        rule, rel = _i_ph(n, I, base.space.pairs)
        tgt = OscSpace(_a_pairs_I(n, I))
        mapping = _ph_to_mapping(base.space, rule, tgt, rel)
        L = conjugate_and_ph(base, B, mapping, target=tgt)
        fam = "A-I'"
    else:
        raise ValueError("ph must be 'A' or 'I'")
    return L.with_entries(L.entries, family=fam, params={"n": n, "I": I, "t": base.params["t"]})


def _lax_a_low(n, a):
    sp = OscSpace(_space_rect(n, a))
    Ab, A = _blocks_rect(sp, n, a)
    tl = msub(meye(sp, a, X), mmul(Ab, A))
    L = mblocks([[tl, Ab], [mscale(A, -1), meye(sp, n - a)]])
    return sp, L


def _lax_a_high(n, a):
    sp = OscSpace([(j, i) for i in range(1, a + 1) for j in range(a + 1, n + 1)])
    A2 = [[sp.ann((j, i)) for i in range(1, a + 1)] for j in range(a + 1, n + 1)]
    Ab2 = [[sp.cre((j, i)) for j in range(a + 1, n + 1)] for i in range(1, a + 1)]
    br = madd(meye(sp, n - a, X), mmul(A2, Ab2))
    L = mblocks([[meye(sp, a), Ab2], [A2, br]])
    return sp, L


def _lax_a_deg(n, I):
    I = sorted(set(I))
    a = len(I)
    alg = AlgebraType("A", n)
    sp, L = _lax_a_low(n, a)
    base = LaxMatrix(alg, "A-deg", {}, sp, L, degenerate=True)
    rule, rel = _i_ph(n, I, sp.pairs)
    tgt = OscSpace(_a_pairs_I(n, I))
    mapping = _ph_to_mapping(sp, rule, tgt, rel)
    out = conjugate_and_ph(base, b_subset(n, I), mapping, target=tgt)
    return out.with_entries(
        out.entries, params={"n": n, "I": I}, qtwist=_a_qtwist(tgt.pairs), const_twist=_a_const(n)
    )


def _lax_a_deg_bar(n, I):
    """Degenerate Lax for the complement of ``I`` built from the lower-right block form."""
    I = sorted(set(I))
    a = len(I)
    alg = AlgebraType("A", n)
    sp, L = _lax_a_high(n, a)
    base = LaxMatrix(alg, "A-deg-bar", {}, sp, L, degenerate=True)
    rule, rel = _i_ph(n, I, sp.pairs, bar=True)
    Ib = [j for j in range(1, n + 1) if j not in I]
    tgt = OscSpace(_a_pairs_I(n, Ib))
    mapping = _ph_to_mapping(sp, rule, tgt, rel)
    out = conjugate_and_ph(base, b_subset(n, I), mapping, target=tgt)
    return out.with_entries(
        out.entries, params={"n": n, "I": I}, qtwist=_a_qtwist(tgt.pairs), const_twist=_a_const(n)
    )


def _a_const(n):
    return [{i: 1} for i in range(n)]


# types C and D

def _cd_pairs(fam, r):
    K = 2 * r
    lo = 0 if fam == "C" else 1
    return [(i, K + 1 - j) for i in range(1, r + 1) for j in range(i + lo, r + 1)]


def _cd_blocks(fam, sp, r):
    """Blocks ``Abar`` (creations) and ``A`` (annihilations) of the nondegenerate Lax."""
    K = 2 * r
    Ab = mzero(sp, r)
    A = mzero(sp, r)
    for P in range(1, r + 1):
        for Q in range(1, r + 1):
            j = r + 1 - Q
            i = r + 1 - P
            if fam == "C":
                u, v = min(P, j), max(P, j)
                Ab[P - 1][Q - 1] = sp.cre((u, K + 1 - v)).scale(2 if P == j else 1)
                u, v = min(i, Q), max(i, Q)
                A[P - 1][Q - 1] = sp.ann((u, K + 1 - v))
            else:
                if P < j:
                    Ab[P - 1][Q - 1] = sp.cre((P, K + 1 - j))
                elif P > j:
                    Ab[P - 1][Q - 1] = -sp.cre((j, K + 1 - P))
                if i > Q:
                    A[P - 1][Q - 1] = sp.ann((Q, K + 1 - i))
                elif i < Q:
                    A[P - 1][Q - 1] = -sp.ann((i, K + 1 - Q))
    return Ab, A


def _cd_blocks2(fam, sp, r):
    """Blocks ``Abar_2`` and ``A_2`` in the pairs ``(j', i)``."""
    K = 2 * r
    Ab = mzero(sp, r)
    A = mzero(sp, r)
    for P in range(1, r + 1):
        for Q in range(1, r + 1):
            j = r + 1 - Q
            i = r + 1 - P
            if fam == "C":
                u, v = min(P, j), max(P, j)
                Ab[P - 1][Q - 1] = sp.cre((K + 1 - v, u))
                u, v = min(i, Q), max(i, Q)
                A[P - 1][Q - 1] = sp.ann((K + 1 - v, u)).scale(2 if i == Q else 1)
            else:
                if P < j:
                    Ab[P - 1][Q - 1] = sp.cre((K + 1 - j, P))
                elif P > j:
                    Ab[P - 1][Q - 1] = -sp.cre((K + 1 - P, j))
                if i > Q:
                    A[P - 1][Q - 1] = sp.ann((K + 1 - i, Q))
                elif i < Q:
                    A[P - 1][Q - 1] = -sp.ann((K + 1 - Q, i))
    return Ab, A


def _cd_shift(fam, r):
    return r + 1 if fam == "C" else r - 1


def _lax_cd(fam, r, t):
    t = _coerce_t(t)
    alg = AlgebraType(fam, r)
    sp = OscSpace(_cd_pairs(fam, r))
    Ab, A = _cd_blocks(fam, sp, r)
    s = _cd_shift(fam, r)
    AAb = mmul(A, Ab)
    tl = msub(meye(sp, r, X + t), mmul(Ab, A))
    tr = mscale(msub(mscale(Ab, 2 * t + s), mmul(Ab, AAb)), -1)
    bl = mscale(A, -1)
    br = madd(meye(sp, r, X - t - s), AAb)
    L = mblocks([[tl, tr], [bl, br]])
    return LaxMatrix(alg, fam, {"r": r, "t": t}, sp, L)


def _ph_mu(fam, r, mu):
    K = 2 * r
    lo = 0 if fam == "C" else 1
    rule = {}
    for i in range(1, r + 1):
        if mu[i - 1] == -1:
            for j in range(i + lo, r + 1):
                rule[(i, K + 1 - j)] = ("ann", -1, "cre", 1)
    return rule


def _lax_cd_mu(fam, r, mu, t):
    mu = tuple(int(m) for m in mu)
    if len(mu) != r or any(m not in (1, -1) for m in mu):
        raise ValueError("mu must be a vector of r signs")
    base = _lax_cd(fam, r, t)
    mapping = _ph_to_mapping(base.space, _ph_mu(fam, r, mu))
    L = conjugate_and_ph(base, b_mu(base.alg, mu), mapping)
    return L.with_entries(L.entries, family=f"{fam}-mu", params={"r": r, "mu": list(mu), "t": base.params["t"]})


def _cd_const(r):
    return [{i: 1} for i in range(r)] + [{r - 1 - i: -1} for i in range(r)]


def _cd_qtwist(pairs, K):
    out = {}
    for p in pairs:
        i, j = min(p), K + 1 - max(p)
        e = {i - 1: -1}
        e[j - 1] = e.get(j - 1, 0) - 1
        out[p] = e
    return out


def _lax_cd_deg(fam, r, sign):
    alg = AlgebraType(fam, r)
    K = 2 * r
    sp = OscSpace(_cd_pairs(fam, r))
    Ab, A = _cd_blocks(fam, sp, r)
    tl = msub(meye(sp, r, X), mmul(Ab, A))
    L = mblocks([[tl, Ab], [mscale(A, -1), meye(sp, r)]])
    plus = LaxMatrix(alg, f"{fam}-deg", {"r": r, "sign": 1}, sp, L, degenerate=True,
                     qtwist=_cd_qtwist(sp.pairs, K), const_twist=_cd_const(r))
    if sign == 1:
        return plus
    if sign != -1:
        raise ValueError("sign must be +1 or -1")
    tgt = OscSpace([(q, p) for p, q in sp.pairs])
    rule = {p: ("ann", -1, "cre", 1) for p in sp.pairs}
    mapping = _ph_to_mapping(sp, rule, tgt, lambda p: (p[1], p[0]))
    out = conjugate_and_ph(plus, b_mu(alg, (-1,) * r), mapping, target=tgt, check_hw=False)
    return out.with_entries(out.entries, params={"r": r, "sign": -1}, qtwist=_cd_qtwist(tgt.pairs, K))


# types B and D with quadratic Lax matrices

def _bd_alg(fam, r):
    if fam not in ("B", "D"):
        raise ValueError("quadratic Lax matrices exist for B and D")
    return AlgebraType(fam, r)


def _antidiag(sp, m):
    J = mzero(sp, m)
    for i in range(m):
        J[i][m - 1 - i] = sp.one()
    return J


def _bd_vectors(sp, labels):
    cre, ann = _vec_ops(sp, labels)
    row_c = [cre]
    col_c = [[c] for c in cre]
    row_a = [ann]
    col_a = [[a] for a in ann]
    return row_c, col_c, row_a, col_a


def _scal(sp, v):
    return [[NormalPoly.const(sp, v)]]


def _lax_bd(fam, r, t=None, x12=None):
    alg = _bd_alg(fam, r)
    K = alg.K
    m = K - 2
    if x12 is None:
        x12 = 1 - _coerce_t(t) - mpq(K, 2)
    x12 = x12 if isinstance(x12, Poly) else as_scalar(x12)
    tval = 1 - mpq(K, 2) - x12
    tval = _norm(tval) if isinstance(tval, Poly) else tval
    sp = OscSpace([(1, l) for l in range(2, K)])
    labels = sp.pairs
    P, Pc, W, Wc = _bd_vectors(sp, labels)
    J = _antidiag(sp, m)
    one = [[sp.one()]]
    z1 = mzero(sp, 1, m)
    zc = mzero(sp, m, 1)
    zz = mzero(sp, 1)
    Im = meye(sp, m)
    pJp = mscale(mmul(mmul(P, J), Pc), -HALF)
    Jp = mmul(J, Pc)
    up = mblocks([[one, P, pJp], [zc, Im, mscale(Jp, -1)], [zz, z1, one]])
    upr = mblocks([[one, mscale(P, -1), pJp], [zc, Im, Jp], [zz, z1, one]])
    x1, x2 = x12, mpq(0)
    u = X + (x1 + x2 - 1) * HALF
    k2 = 2 - mpq(K, 2)
    wJw = mscale(mmul(mmul(W, J), Wc), -HALF)
    D = mblocks(
        [
            [_scal(sp, (u - x1) * (u - x1 + k2)), z1, zz],
            [mscale(Wc, -(u - x1)), meye(sp, m, (u - x1) * (u - x2)), zc],
            [wJw, mscale(mmul(W, J), u - x2), _scal(sp, (u - x2) * (u - x2 + k2))],
        ]
    )
    L = mmul(mmul(up, D), upr)
    L = mmap(L, lambda e: e.map_coeffs(_norm))
    return LaxMatrix(alg, "BD", {"alg": fam, "r": r, "t": tval, "x12": x12}, sp, L)


def _bd_index_ok(alg, idx):
    K, r = alg.K, alg.rank
    return 1 <= idx <= r or K + 1 - r <= idx <= K


def _lax_bd_k(fam, r, idx, t):
    alg = _bd_alg(fam, r)
    K = alg.K
    if not _bd_index_ok(alg, idx):
        raise ValueError("index outside the BD index set")
    base = _lax_bd(fam, r, t=t)
    if idx <= r:
        js = range(2, idx + 1)
    else:
        js = range(K + 2 - idx, K)
    rule = {(1, j): ("ann", -1, "cre", 1) for j in js}
    mapping = _ph_to_mapping(base.space, rule)
    L = conjugate_and_ph(base, b_hat(alg, idx), mapping)
    return L.with_entries(L.entries, family="BD-k", params={"alg": fam, "r": r, "k": idx, "t": base.params["t"], "x12": base.params["x12"]})


def _bd_const(alg):
    r = alg.rank
    mid = [{}] if alg.family == "B" else []
    return [{i: 1} for i in range(r)] + mid + [{r - 1 - i: -1} for i in range(r)]


def _bd_qtwist(alg, pairs):
    K, r = alg.K, alg.rank
    out = {}
    for p in pairs:
        l = p[1] if p[0] == 1 else p[0]
        e = {0: -1}
        if l <= r:
            e[l - 1] = 1
        elif l >= K + 1 - r:
            e[K - l] = e.get(K - l, 0) - 1
        out[p] = _pair_q(e)
    return out


def _lax_bd_first(fam, r):
    alg = _bd_alg(fam, r)
    K = alg.K
    m = K - 2
    sp = OscSpace([(1, l) for l in range(2, K)])
    P, Pc, W, Wc = _bd_vectors(sp, sp.pairs)
    J = _antidiag(sp, m)
    pJp = mmul(mmul(P, J), Pc)
    wJw = mmul(mmul(W, J), Wc)
    pw = mmul(P, Wc)
    Jp = mmul(J, Pc)
    wJ = mmul(W, J)
    k2 = 2 - mpq(K, 2)
    c11 = madd(madd(_scal(sp, X * X + X * k2), mscale(pw, -X)), mscale(mmul(pJp, wJw), mpq(1, 4)))
    c12 = msub(mscale(P, X), mscale(mmul(pJp, wJ), HALF))
    c13 = mscale(pJp, -HALF)
    c21 = madd(mscale(Wc, -X), mscale(mmul(Jp, wJw), HALF))
    c22 = msub(meye(sp, m, X), mmul(Jp, wJ))
    c23 = mscale(Jp, -1)
    c31 = mscale(wJw, -HALF)
    L = mblocks([[c11, c12, c13], [c21, c22, c23], [c31, wJ, [[sp.one()]]]])
    L = mmap(L, lambda e: e.map_coeffs(_norm))
    return LaxMatrix(alg, "BD-deg", {"alg": fam, "r": r, "which": 1}, sp, L, degenerate=True,
                     qtwist=_bd_qtwist(alg, sp.pairs), const_twist=_bd_const(alg))


def _lax_bd_last(fam, r):
    alg = _bd_alg(fam, r)
    K = alg.K
    m = K - 2
    sp = OscSpace([(l, 1) for l in range(2, K)])
    P, Pc, W, Wc = _bd_vectors(sp, sp.pairs)
    J = _antidiag(sp, m)
    pJp = mmul(mmul(P, J), Pc)
    wJw = mmul(mmul(W, J), Wc)
    wp = mmul(W, Pc)
    Jp = mmul(J, Pc)
    wJ = mmul(W, J)
    k2 = 2 - mpq(K, 2)
    c22 = madd(meye(sp, m, X), mmul(Wc, P))
    c23 = msub(mscale(Jp, -X), mscale(mmul(Wc, pJp), HALF))
    c31 = mscale(wJw, -HALF)
    c32 = msub(mscale(wJ, -X), mscale(mmul(wJw, P), HALF))
    c33 = madd(madd(_scal(sp, X * X + X * k2), mscale(wp, X)), mscale(mmul(wJw, pJp), mpq(1, 4)))
    L = mblocks([[[[sp.one()]], P, mscale(pJp, -HALF)], [Wc, c22, c23], [c31, c32, c33]])
    L = mmap(L, lambda e: e.map_coeffs(_norm))
    return LaxMatrix(alg, "BD-deg", {"alg": fam, "r": r, "which": K}, sp, L, degenerate=True,
                     qtwist=_bd_qtwist(alg, sp.pairs), const_twist=_bd_const(alg))


def lax_bd_last_via_reflection(fam, r):
    """``J_K L_1 J_K`` followed by the total particle-hole map onto pairs ``(l, 1)``."""
    first = _lax_bd_first(fam, r)
    K = first.alg.K
    sp = first.space
    tgt = OscSpace([(p[1], p[0]) for p in sp.pairs])
    rule = {p: ("ann", -1, "cre", 1) for p in sp.pairs}
    mapping = _ph_to_mapping(sp, rule, tgt, lambda p: (p[1], p[0]))
    JK = SignedPermMatrix([K - 1 - i for i in range(K)])
    out = conjugate_and_ph(first, JK, mapping, target=tgt, check_hw=False)
    return out.with_entries(out.entries, params={"alg": fam, "r": r, "which": K},
                            qtwist=_bd_qtwist(first.alg, tgt.pairs))


# dispatch

FAMILIES = {
    "A-verma": ("n", "lam"),
    "A-rect": ("n", "a", "t"),
    "A-I": ("n", "I", "t"),
    "A-I'": ("n", "I", "t"),
    "A-deg": ("n", "I"),
    "A-deg-bar": ("n", "I"),
    "A-partonic": ("n", "i"),
    "C": ("r", "t"),
    "C-mu": ("r", "mu", "t"),
    "C-deg": ("r", "sign"),
    "D": ("r", "t"),
    "D-mu": ("r", "mu", "t"),
    "D-deg": ("r", "sign"),
    "BD": ("alg", "r", "t"),
    "BD-k": ("alg", "r", "k", "t"),
    "BD-deg": ("alg", "r", "which"),
}


def construct_lax(family: str, **params) -> LaxMatrix:
    """Build a Lax matrix; ``t`` defaults to the formal variable ``t``."""
    p = params
    if family == "A-verma":
        return _lax_a_verma(p["n"], p["lam"])
    if family == "A-rect":
        return _lax_a_rect(p["n"], p["a"], p.get("t"))
    if family == "A-I":
        return _lax_a_I(p["n"], p["I"], p.get("t"), "A")
    if family == "A-I'":
        return _lax_a_I(p["n"], p["I"], p.get("t"), "I")
    if family == "A-deg":
        return _lax_a_deg(p["n"], p["I"])
    if family == "A-deg-bar":
        return _lax_a_deg_bar(p["n"], p["I"])
    if family == "A-partonic":
        L = _lax_a_deg(p["n"], [p["i"]])
        return L.with_entries(L.entries, family="A-partonic", params={"n": p["n"], "i": p["i"]})
    if family in ("C", "D"):
        return _lax_cd(family, p["r"], p.get("t"))
    if family in ("C-mu", "D-mu"):
        return _lax_cd_mu(family[0], p["r"], p["mu"], p.get("t"))
    if family in ("C-deg", "D-deg"):
        return _lax_cd_deg(family[0], p["r"], int(p.get("sign", 1)))
    if family == "BD":
        return _lax_bd(p["alg"], p["r"], t=p.get("t"), x12=p.get("x12"))
    if family == "BD-k":
        return _lax_bd_k(p["alg"], p["r"], int(p["k"]), p.get("t"))
    if family == "BD-deg":
        which = int(p.get("which", 1))
        if which == 1:
            return _lax_bd_first(p["alg"], p["r"])
        L = _lax_bd_last(p["alg"], p["r"])
        if which != L.alg.K:
            raise ValueError("which must be 1 or K")
        return L
    raise ValueError(f"unknown Lax family {family!r}")


# conjugation and particle-hole maps

def highest_weight_defects(L: LaxMatrix) -> int:
    """Number of vacuum-nonannihilating terms among the raising entries (strictly below the diagonal)."""
    n = 0
    for i in range(L.K):
        for j in range(i):
            e = L.entries[i][j]
            n += sum(1 for (c, a) in e.terms if not any(a))
    return n


def conjugate_and_ph(
    L: LaxMatrix,
    B: SignedPermMatrix,
    ph: Mapping | None = None,
    target: OscSpace | None = None,
    check_hw: bool = True,
) -> LaxMatrix:
    """``B L B^{-1}`` with a generator map applied entrywise."""
    if len(B) != L.K:
        raise ValueError("dimension mismatch")
    if not B.preserves_form(L.alg):
        raise ValueError("signed permutation does not preserve the invariant form")
    M = B.conjugate(L.entries)
    tgt = target or L.space
    if ph:
        M = _map_entries(M, ph, tgt)
    elif tgt != L.space:
        M = mmap(M, lambda e: e.embed(tgt))
    out = L.with_entries(M, space=tgt)
    if check_hw and highest_weight_defects(out):
        raise ValueError("vacuum is not a highest-weight vector after conjugation")
    return out


def similarity_map(terms: Iterable, space: OscSpace) -> dict:
    """Generator map induced by conjugation with ``exp(sum c abar_p a_q)``.

    Each term ``(c, p, q)`` sends ``a_p -> a_p - c a_q`` and ``abar_q -> abar_q + c abar_p``.
    """
    terms = list(terms)
    ps = {p for _, p, _ in terms}
    qs = {q for _, _, q in terms}
    if ps & qs:
        raise ValueError("similarity terms must use disjoint pair sets")
    cre = {p: space.cre(p) for p in space.pairs}
    ann = {p: space.ann(p) for p in space.pairs}
    for c, p, q in terms:
        c = as_scalar(c)
        ann[p] = ann[p] - space.ann(q).scale(c)
        cre[q] = cre[q] + space.cre(p).scale(c)
    return {p: (cre[p], ann[p]) for p in space.pairs}


def similarity_grading_ok(terms, qtwist: Mapping) -> bool:
    """Each term must pair oscillators of equal twist weight."""
    return all(qtwist.get(p, {}) == qtwist.get(q, {}) for _, p, q in terms)


# RTT and algebra checks

def _rtt_defect(E1, E2, R: RMatrix, u) -> tuple[int, list]:
    K = R.K
    f, g, h = R.weights(u)
    eps = R.eps
    Xc: dict = {}
    Yc: dict = {}

    def Xp(m, n, j, l):
        key = (m, n, j, l)
        if key not in Xc:
            Xc[key] = normal_mul(E1[m][j], E2[n][l])
        return Xc[key]

    def Yp(i, k, m, n):
        key = (i, k, m, n)
        if key not in Yc:
            Yc[key] = normal_mul(E2[k][n], E1[i][m])
        return Yc[key]

    total = 0
    where = []
    for i, k, j, l in itertools.product(range(K), repeat=4):
        lhs = Xp(i, k, j, l).scale(f) + Xp(k, i, j, l).scale(g)
        rhs = Yp(i, k, j, l).scale(f) + Yp(i, k, l, j).scale(g)
        if h is not None:
            if k == K - 1 - i:
                for m in range(K):
                    lhs = lhs + Xp(m, K - 1 - m, j, l).scale(h * (eps[i] * eps[m]))
            if l == K - 1 - j:
                for m in range(K):
                    rhs = rhs + Yp(i, k, m, K - 1 - m).scale(h * (eps[m] * eps[j]))
        d = term_count(lhs - rhs)
        if d:
            total += d
            where.append([i + 1, k + 1, j + 1, l + 1])
    return total, where


def rtt_check(L1: LaxMatrix, L2: LaxMatrix | None = None, R: RMatrix | None = None) -> Report:
    """``R(z-w) L1(z) L2(w) = L2(w) L1(z) R(z-w)`` as an identity of polynomials in ``z, w``."""
    L2 = L2 or L1
    R = R or RMatrix(L1.alg)
    rep = Report("rtt", L1.family, {k: _jsonable(v) for k, v in L1.params.items()})
    with timed(rep):
        if L1.K != L2.K or L1.K != R.K:
            rep.fail("dimension mismatch")
            return rep
        if L1.space != L2.space:
            rep.fail("Lax matrices live in different oscillator spaces")
            return rep
        z, w = Poly.var("z"), Poly.var("w")
        d, where = _rtt_defect(L1.at(z), L2.at(w), R, z - w)
        rep.add_defects(d)
        if where:
            rep.details["entries"] = where[:20]
    return rep


def _bracket(a, b):
    return normal_mul(a, b) - normal_mul(b, a)


def _component_defects(F, alg: AlgebraType) -> int:
    """Bracket relations of gl_n, sp_2r or so_K in the ``F_ij`` basis plus the symmetry constraint."""
    K = len(F)
    sp = F[0][0].space
    zero = NormalPoly(sp)
    d = 0
    if alg.family == "A":
        for i, j, k, l in itertools.product(range(K), repeat=4):
            want = (F[i][l] if j == k else zero) - (F[k][j] if i == l else zero)
            d += term_count(_bracket(F[i][j], F[k][l]) - want)
        return d
    eps = alg.eps()
    pr = lambda i: K - 1 - i
    for i, j in itertools.product(range(K), repeat=2):
        d += term_count(F[i][j] + F[pr(j)][pr(i)].scale(eps[i] * eps[j]))
    for i, j, k, l in itertools.product(range(K), repeat=4):
        want = (F[i][l] if k == j else zero) - (F[k][j] if i == l else zero)
        corr = (F[pr(j)][l] if k == pr(i) else zero) - (F[k][pr(i)] if l == pr(j) else zero)
        want = want - corr.scale(eps[i] * eps[j])
        d += term_count(_bracket(F[i][j], F[k][l]) - want)
    return d


def _x_apply_right(Z, alg, K):
    """``(Z X)`` for ``X = P`` (type A) or ``P - Q``; ``Z`` is a function of ``((i,k),(m,n))``."""
    eps = alg.eps() if alg.family != "A" else None

    def out(i, k, j, l):
        v = Z(i, k, l, j)
        if eps is not None and l == K - 1 - j:
            for m in range(K):
                v = v - Z(i, k, m, K - 1 - m).scale(eps[m] * eps[j])
        return v

    return out


def _x_apply_left(W, alg, K):
    eps = alg.eps() if alg.family != "A" else None

    def out(i, k, j, l):
        v = W(k, i, j, l)
        if eps is not None and k == K - 1 - i:
            for m in range(K):
                v = v - W(m, K - 1 - m, j, l).scale(eps[i] * eps[m])
        return v

    return out


def _contracted_defects(L: LaxMatrix) -> int:
    """Relation implied by RTT at the leading order in the second spectral parameter."""
    K = L.K
    alg = L.alg
    if L.degree == 1:
        Jm = L.coeff(1)
        F = L.coeff(0)
        Z = lambda i, k, m, n: normal_mul(F[k][n], Jm[i][m])
        W = lambda m, n, j, l: normal_mul(Jm[m][j], F[n][l])
        lhs = lambda i, k, j, l: _bracket(F[i][j], F[k][l])
    else:
        A = L.coeff(2)
        B = L.coeff(1)
        Z = lambda i, k, m, n: normal_mul(B[k][n], A[i][m]).scale(2) + normal_mul(B[i][m], A[k][n])
        W = lambda m, n, j, l: normal_mul(A[m][j], B[n][l]).scale(2) + normal_mul(B[m][j], A[n][l])
        lhs = lambda i, k, j, l: _bracket(B[i][j], B[k][l])
    ZX = _x_apply_right(Z, alg, K)
    XW = _x_apply_left(W, alg, K)
    d = 0
    for i, k, j, l in itertools.product(range(K), repeat=4):
        d += term_count(lhs(i, k, j, l) - (ZX(i, k, j, l) - XW(i, k, j, l)))
    return d


def lie_algebra_check(L: LaxMatrix) -> Report:
    rep = Report("lie", L.family, {k: _jsonable(v) for k, v in L.params.items()})
    with timed(rep):
        if L.degenerate:
            rep.mode = "contracted"
            rep.add_defects(_contracted_defects(L), "contracted bracket relation")
            return rep
        top = L.coeff(L.degree)
        rep.add_defects(mdefect(top, meye(L.space, L.K)), "leading coefficient is not the identity")
        F = L.generators()
        rep.add_defects(_component_defects(F, L.alg), "bracket relations")
        if L.degree == 1:
            rep.add_defects(_contracted_defects(L), "contracted bracket relation")
        else:
            K = L.K
            M = L.coeff(1)
            G = L.coeff(0)
            x12 = L.params["x12"]
            want = madd(
                madd(mscale(mmul(M, M), HALF), mscale(M, mpq(K - 2, 4))),
                meye(L.space, K, (K - 3 - x12 * x12) * mpq(1, 4)),
            )
            want = mmap(want, lambda e: e.map_coeffs(_norm))
            rep.add_defects(mdefect(G, want), "free-term identity")
    return rep


# factorisation of products of degenerate Lax matrices

def _union_space(*spaces):
    seen = []
    for s in spaces:
        for p in s.pairs:
            if p not in seen:
                seen.append(p)
    return OscSpace(seen)


def _creation_only(M) -> bool:
    K = len(M)
    for i in range(K):
        for j in range(K):
            for c, a in M[i][j].terms:
                if any(a):
                    return False
    return True


def factorisation_data(case: Mapping):
    """Left side, right side, the G factor and the similarity terms for a factorisation case."""
    typ = case["type"]
    if typ == "A":
        n = case["n"]
        I = sorted(case.get("I") or range(1, case["a"] + 1))
        a = len(I)
        plain = I == list(range(1, a + 1))
        L1 = _lax_a_deg(n, I)
        L2 = _lax_a_deg_bar(n, I)
        big = _lax_a_rect(n, a, T) if plain else _lax_a_I(n, I, T, "I")
        U = _union_space(L1.space, L2.space)
        Ib = [j for j in range(1, n + 1) if j not in I]
        G = meye(U, n)
        terms = []
        for i in I:
            for j in Ib:
                if i < j:
                    G[i - 1][j - 1] = U.cre((j, i))
                    terms.append((1, (i, j), (j, i)))
                else:
                    G[i - 1][j - 1] = -U.ann((j, i))
                    terms.append((1, (j, i), (i, j)))
        left = mmul(L1.embed(U).at(X + T), L2.embed(U).at(X - a))
        qt = {**(L1.qtwist or {}), **(L2.qtwist or {})}
        return left, big.embed(U).entries, G, terms, U, qt, "x+t, x-a"
    if typ in ("C", "D"):
        r = case["r"]
        K = 2 * r
        L1 = _lax_cd_deg(typ, r, 1)
        L2 = _lax_cd_deg(typ, r, -1)
        big = _lax_cd(typ, r, T)
        U = _union_space(L1.space, L2.space)
        Ab2, _ = _cd_blocks2(typ, U, r)
        G = mblocks([[meye(U, r), Ab2], [mzero(U, r), meye(U, r)]])
        lo = 0 if typ == "C" else 1
        terms = [
            (2 if i == j else 1, (i, K + 1 - j), (K + 1 - j, i))
            for i in range(1, r + 1)
            for j in range(i + lo, r + 1)
        ]
        s = _cd_shift(typ, r)
        left = mmul(L1.embed(U).at(X + T), L2.embed(U).at(X - T - s))
        qt = {**L1.qtwist, **L2.qtwist}
        return left, big.embed(U).entries, G, terms, U, qt, f"x+t, x-t-{s}"
    if typ == "BD":
        fam, r = case["alg"], case["r"]
        L1 = _lax_bd_first(fam, r)
        L2 = _lax_bd_last(fam, r)
        big = _lax_bd(fam, r, t=T)
        K = L1.alg.K
        m = K - 2
        U = _union_space(L1.space, L2.space)
        P, Pc, _, _ = _bd_vectors(U, L2.space.pairs)
        J = _antidiag(U, m)
        G = mblocks(
            [
                [[[U.one()]], P, mscale(mmul(mmul(P, J), Pc), -HALF)],
                [mzero(U, m, 1), meye(U, m), mscale(mmul(J, Pc), -1)],
                [mzero(U, 1), mzero(U, 1, m), [[U.one()]]],
            ]
        )
        terms = [(1, (1, l), (l, 1)) for l in range(2, K)]
        q = mpq(K, 4)
        left = mmul(L1.embed(U).at(X - 1 + T * HALF + q), L2.embed(U).at(X - T * HALF - q))
        qt = {**L1.qtwist, **L2.qtwist}
        return left, big.embed(U).entries, G, terms, U, qt, "x-1+t/2+K/4, x-t/2-K/4"
    raise ValueError(f"unknown factorisation type {typ!r}")


def lax_factorisation_check(case: Mapping) -> Report:
    """Product of two degenerate Lax matrices against the similarity-transformed nondegenerate one."""
    rep = Report("laxfac", str(case.get("type")), {k: _jsonable(v) for k, v in case.items()})
    with timed(rep):
        left, big, G, terms, U, qt, shifts = factorisation_data(case)
        rep.details["shifts"] = shifts
        S = similarity_map(terms, U)
        right = _map_entries(mmul(big, G), S, U)
        rep.add_defects(mdefect(left, right), "product differs from the transformed right side")
        if not similarity_grading_ok(terms, qt):
            rep.fail("similarity does not preserve the twist grading")
        g_plain = _creation_only(G)
        rep.details["G_creation_only"] = g_plain
        if case["type"] != "A" or case.get("I") in (None, list(range(1, len(case.get("I") or []) + 1))):
            if not g_plain:
                rep.fail("G contains annihilation operators")
    return rep


# renormalized limits

def _limit_entries(M, report: Report):
    out = []
    for row in M:
        r = []
        for e in row:
            terms = {}
            for k, v in e.terms.items():
                v = Poly.coerce(v)
                lo, hi = v.degrees("t")
                if hi > 0:
                    report.add_defects(sum(1 for kk in v.terms if kk[-1] > 0), "positive power of t")
                c = v.coefficients("t").get(0)
                if c is not None and c:
                    terms[k] = _norm(c)
            r.append(NormalPoly(e.space, terms))
        out.append(r)
    return out


def _block_map(src_blocks, dst_blocks, src_space, dst_space) -> dict:
    """Generator map read off from matching single-generator block entries."""
    imgs: dict = {}
    for S, D in zip(src_blocks, dst_blocks):
        for rs, rd in zip(S, D):
            for s, d in zip(rs, rd):
                if not s.terms:
                    if d.terms:
                        raise ValueError("block shapes disagree")
                    continue
                ((c, a), v), = s.terms.items()
                ((c2, a2), v2), = d.terms.items()
                i = next(k for k in range(len(c)) if c[k] or a[k])
                j = next(k for k in range(len(c2)) if c2[k] or a2[k])
                kind = "cre" if c[i] else "ann"
                kind2 = "cre" if c2[j] else "ann"
                img = (dst_space.cre if kind2 == "cre" else dst_space.ann)(dst_space.pairs[j]).scale(v2 / v)
                key = (src_space.pairs[i], kind)
                if key in imgs and imgs[key] != img:
                    raise ValueError("inconsistent block substitution")
                imgs[key] = img
    return {p: (imgs[(p, "cre")], imgs[(p, "ann")]) for p in src_space.pairs}


def limit_data(case: Mapping):
    """Scaled nondegenerate Lax, the substitution and the expected degenerate Lax."""
    typ = case["type"]
    side = int(case.get("side", 1))
    if typ == "A":
        n, a = case["n"], case["a"]
        big = _lax_a_rect(n, a, T)
        if side == 1:
            M = mdiag_right(big.at(X - T), [1] * a + [-T ** -1] * (n - a))
            want = _lax_a_deg(n, list(range(1, a + 1)))
            return M, None, want
        M = mdiag_left(big.at(X + a), [T ** -1] * a + [1] * (n - a))
        want = _lax_a_deg_bar(n, list(range(1, a + 1)))
        mp = {(i, j): (-want.space.cre((j, i)), -want.space.ann((j, i))) for (i, j) in big.space.pairs}
        return M, (mp, want.space), want
    if typ in ("C", "D"):
        r = case["r"]
        big = _lax_cd(typ, r, T)
        s = _cd_shift(typ, r)
        h = (2 * T) ** -1
        if side == 1:
            M = mdiag_right(big.at(X - T), [1] * r + [-h] * r)
            return M, None, _lax_cd_deg(typ, r, 1)
        M = mdiag_left(big.at(X + T + s), [h] * r + [1] * r)
        want = _lax_cd_deg(typ, r, -1)
        Ab, A = _cd_blocks(typ, big.space, r)
        Ab2, A2 = _cd_blocks2(typ, want.space, r)
        mp = _block_map([Ab, A], [mscale(Ab2, -1), mscale(A2, -1)], big.space, want.space)
        return M, (mp, want.space), want
    if typ == "BD":
        fam, r = case["alg"], case["r"]
        big = _lax_bd(fam, r, t=T)
        K = big.alg.K
        q = mpq(K, 4)
        if side == 1:
            M = mdiag_right(big.at(X + 1 - T * HALF - q), [1] + [-T ** -1] * (K - 2) + [T ** -2])
            return M, None, _lax_bd_first(fam, r)
        M = mdiag_left(big.at(X + T * HALF + q), [T ** -2] + [T ** -1] * (K - 2) + [1])
        want = _lax_bd_last(fam, r)
        mp = {(1, l): (-want.space.cre((l, 1)), -want.space.ann((l, 1))) for (_, l) in big.space.pairs}
        return M, (mp, want.space), want
    raise ValueError(f"unknown limit type {typ!r}")


def renormalized_limit_check(case: Mapping) -> Report:
    rep = Report("limit", str(case.get("type")), {k: _jsonable(v) for k, v in case.items()})
    with timed(rep):
        M, sub, want = limit_data(case)
        lim = _limit_entries(M, rep)
        if sub is not None:
            mp, tgt = sub
            lim = _map_entries(lim, mp, tgt)
        rep.add_defects(mdefect(lim, want.entries), "limit differs from the degenerate Lax")
    return rep


# R-matrix identities

def _r_on_space(R: RMatrix, u, a: int, b: int) -> dict:
    """``R_ab(u)`` acting on ``(C^K)^{⊗3}``; basis tuples are 0-based."""
    base = R.dense(u)
    K = R.K
    out = {}
    for ((i, k), (j, l)), v in base.items():
        for o in range(K):
            row = [o, o, o]
            col = [o, o, o]
            row[a], row[b] = i, k
            col[a], col[b] = j, l
            rest = 3 - a - b
            row[rest] = col[rest] = o
            out[(tuple(row), tuple(col))] = v
    return out


def r_matrix_properties(alg: AlgebraType) -> Report:
    """Yang-Baxter equation, Weyl-group invariance and (type A) unitarity."""
    rep = Report("rmatrix", alg.family, {"alg": str(alg)})
    with timed(rep):
        if alg.rank > 4:
            rep.fail("rank above 4")
            return rep
        R = RMatrix(alg)
        z, w = Poly.var("z"), Poly.var("w")
        lhs = _rmul(_rmul(_r_on_space(R, z - w, 0, 1), _r_on_space(R, z, 0, 2)), _r_on_space(R, w, 1, 2))
        rhs = _rmul(_rmul(_r_on_space(R, w, 1, 2), _r_on_space(R, z, 0, 2)), _r_on_space(R, z - w, 0, 1))
        d = sum(len((lhs.get(k, Poly()) - rhs.get(k, Poly())).terms) for k in set(lhs) | set(rhs))
        rep.add_defects(d, "Yang-Baxter")
        Rz = R.dense(z)
        for B in weyl_generators(alg):
            BB = {}
            for i in range(R.K):
                for k in range(R.K):
                    BB[((B.perm[i], B.perm[k]), (i, k))] = Poly.const(B.signs[i] * B.signs[k])
            a1 = _rmul(Rz, BB)
            a2 = _rmul(BB, Rz)
            d = sum(len((a1.get(k, Poly()) - a2.get(k, Poly())).terms) for k in set(a1) | set(a2))
            rep.add_defects(d, f"invariance under {B!r}")
        if alg.family == "A":
            prod = _rmul(R.dense(z), R.dense(-z))
            ident = {((i, k), (i, k)): 1 - z * z for i in range(R.K) for k in range(R.K)}
            d = sum(len((prod.get(k, Poly()) - ident.get(k, Poly())).terms) for k in set(prod) | set(ident))
            rep.add_defects(d, "unitarity")
    return rep


def weyl_generators(alg: AlgebraType) -> list[SignedPermMatrix]:
    """Signed permutations used in the Lax constructions for this algebra."""
    K = alg.K
    out = []
    if alg.family == "A":
        for i in range(K - 1):
            perm = list(range(K))
            perm[i], perm[i + 1] = i + 1, i
            out.append(SignedPermMatrix(perm))
        return out
    r = alg.rank
    if alg.family in ("C", "D"):
        for mu in itertools.product((1, -1), repeat=r):
            if alg.family == "D" and mu.count(-1) % 2:
                continue
            out.append(b_mu(alg, mu))
    if alg.family in ("B", "D"):
        for idx in list(range(1, r + 1)) + list(range(K + 1 - r, K + 1)):
            out.append(b_hat(alg, idx))
    if alg.family == "B":
        for mu in itertools.product((1, -1), repeat=r):
            out.append(b_mu(alg, mu))
    return out
