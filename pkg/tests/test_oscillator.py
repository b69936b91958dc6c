import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbgg.coeff import FloatScalar, mpq
from qbgg.oscillator import (
    FockVector,
    NormalPoly,
    OscSpace,
    TwistWeights,
    apply_to_fock,
    fock_trace,
    fock_trace_float,
    normal_mul,
    substitute_generators,
    truncated_matrix,
)

S1 = OscSpace(["p"])
S2 = OscSpace([(1, 2), (2, 1)])


def a(sp=S1, p="p"):
    return sp.ann(p)


def ab(sp=S1, p="p"):
    return sp.cre(p)


def test_normal_mul_examples():
    assert normal_mul(a(), ab()) == ab() * a() + 1
    x, y = S2.ann((1, 2)), S2.cre((2, 1))
    assert normal_mul(x, y) == NormalPoly.monomial(S2, {(2, 1): 1}, {(1, 2): 1})
    n = normal_mul(a(), ab())
    assert normal_mul(n, n) == ab() ** 2 * a() ** 2 + 3 * ab() * a() + 1


def test_mismatched_spaces():
    with pytest.raises(ValueError):
        normal_mul(a(), S2.one())


def _rand_poly(rng, sp, deg=3, terms=3):
    out = NormalPoly(sp)
    for _ in range(terms):
        c = {p: rng.randint(0, deg) for p in sp.pairs if rng.random() < 0.7}
        an = {p: rng.randint(0, deg) for p in sp.pairs if rng.random() < 0.7}
        out = out + NormalPoly.monomial(sp, c, an, mpq(rng.randint(-5, 5), rng.randint(1, 4)))
    return out


def _matmul(A, B):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n)), mpq(0)) for j in range(n)] for i in range(n)]


def test_normal_mul_vs_truncated_matrix():
    """200 random products agree with the product of truncated Fock matrices on the safe window."""
    rng = random.Random(3)
    cut = 8
    for trial in range(200):
        sp = S1 if trial % 2 else OscSpace(["u", "v"])
        if len(sp) == 2:
            cut = 5
        else:
            cut = 8
        x = _rand_poly(rng, sp, deg=2, terms=2)
        y = _rand_poly(rng, sp, deg=2, terms=2)
        M = truncated_matrix(normal_mul(x, y), cut)
        P = _matmul(truncated_matrix(x, cut), truncated_matrix(y, cut))
        cre_y = max((max(c) for c, _ in y.terms), default=0)
        from qbgg.oscillator import fock_basis

        basis = fock_basis(len(sp), cut)
        for j, m in enumerate(basis):
            if max(m) + cre_y > cut:
                continue
            for i in range(len(basis)):
                assert M[i][j] == P[i][j]


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_normal_mul_associative_distributive(r):
    sp = OscSpace(["u", "v"])
    x, y, z = (_rand_poly(r, sp, 2, 2) for _ in range(3))
    assert normal_mul(normal_mul(x, y), z) == normal_mul(x, normal_mul(y, z))
    assert normal_mul(x, y + z) == normal_mul(x, y) + normal_mul(x, z)


def test_substitute_generators():
    ph = {"p": (-a(), ab())}
    assert substitute_generators(ab() * a(), ph) == -(ab() * a()) - 1
    x = ab() ** 2 * a() + 3
    assert substitute_generators(x, {}) == x
    with pytest.raises(ValueError, match="not an automorphism"):
        substitute_generators(ab() * a(), {"p": (a(), ab())})


def test_particle_hole_twice_is_signed_identity():
    """Applying the particle-hole map twice sends abar -> -abar and a -> -a on the transformed pair."""
    ph = {"p": (-a(), ab())}
    x = ab() ** 2 * a() + 5 * ab() * a() ** 3
    twice = substitute_generators(substitute_generators(x, ph), ph)
    signed = substitute_generators(x, {"p": (-ab(), -a())})
    assert twice == signed


def test_fock_trace_examples():
    w = TwistWeights([mpq(1, 2)])
    assert fock_trace(S1.one(), w) == 2
    assert fock_trace(ab() * a(), w) == 2
    assert fock_trace(ab() ** 2 * a(), TwistWeights([mpq(3, 7)])) == 0
    with pytest.raises(ZeroDivisionError):
        fock_trace(S1.one(), TwistWeights([mpq(1)]))


def test_fock_trace_vs_float_partial_sums():
    """100 random one-pair cases at q = 1/3 against the floating partial sum up to M = 60."""
    rng = random.Random(11)
    w = TwistWeights([mpq(1, 3)], mpq(rng.randint(1, 5), 3))
    for _ in range(100):
        x = _rand_poly(rng, S1, deg=4, terms=4)
        exact = fock_trace(x, w)
        fl = FloatScalar(fock_trace_float(x, w, 60))
        assert fl.close_to(exact, 1e-9)


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False))
def test_fock_trace_linear_and_graded(r):
    sp = OscSpace(["u", "v"])
    w = TwistWeights([mpq(1, 3), mpq(-2, 5)], mpq(3, 2))
    x, y = _rand_poly(r, sp), _rand_poly(r, sp)
    c = mpq(r.randint(-9, 9), 7)
    assert fock_trace(x + y * c, w) == fock_trace(x, w) + c * fock_trace(y, w)
    unbalanced = NormalPoly.monomial(sp, {"u": 2, "v": 1}, {"u": 1, "v": 1}, 5)
    assert fock_trace(unbalanced, w) == 0


def test_apply_to_fock():
    vac = FockVector.vacuum(S1)
    assert not apply_to_fock(a(), vac)
    m = FockVector(S1, {(4,): mpq(1)})
    assert apply_to_fock(ab() * a(), m) == m.scale(4)
    assert apply_to_fock(a() ** 2, FockVector(S1, {(3,): mpq(1)})) == FockVector(S1, {(1,): mpq(6)})


def test_truncated_matrix_examples():
    assert truncated_matrix(ab() * a(), 2) == [[0, 0, 0], [0, 1, 0], [0, 0, 2]]
    assert truncated_matrix(a(), 2) == [[0, 1, 0], [0, 0, 2], [0, 0, 0]]


def test_normal_poly_json_roundtrip():
    x = ab() ** 2 * a() * mpq(-3, 7) + 1
    assert NormalPoly.from_json(S1, x.to_json()) == x
