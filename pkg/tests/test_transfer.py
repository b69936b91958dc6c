import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbgg.coeff import FloatScalar, Poly, TauPoint, mpq
from qbgg.lax import b_mu, construct_lax
from qbgg.oscillator import NormalPoly, fock_trace_float, normal_mul
from qbgg.transfer import (
    TensorOperator,
    TwistSpec,
    bgg_identity_check,
    build_finite_module,
    commutativity_check,
    continued_transfer,
    determinant_identity_check,
    expected_vanishing_probe,
    factorisation_identity_check,
    lax_for_coset,
    monodromy,
    q_A,
    q_bd,
    q_bd_last,
    q_mu,
    q_operator,
    q_weights,
    qq_relation_check,
    t_symmetry_check,
    t_symmetry_data,
    transfer_finite,
    transfer_plus,
    twist_condition_defects,
)
from qbgg.weyl import AlgebraType, Case, coset_character, enumerate_cosets, truncated_bgg_character, weyl_character

from conftest import generic_tau

X = Poly.var("x")
A2, A3 = AlgebraType("A", 2), AlgebraType("A", 3)
C2 = AlgebraType("C", 2)
TAU2 = TauPoint([mpq(2), mpq(3)])
TAU3 = TauPoint([mpq(2), mpq(3), mpq(5)])


def _alg_cases(max_rank=3):
    for f, r in [("A", 2), ("A", 3), ("C", 1), ("C", 2), ("C", 3), ("D", 2), ("D", 3), ("B", 2), ("B", 3)]:
        if r > max_rank:
            continue
        alg = AlgebraType(f, r)
        cases = {"A": [Case("rect", a=a) for a in range(1, r)], "C": [Case("spinor")], "B": [Case("vector")],
                 "D": [Case("spinor", sector=1), Case("spinor", sector=-1), Case("vector")]}[f]
        for case in cases:
            yield alg, case


# monodromy and tensor operators

def test_monodromy_small_N():
    L = construct_lax("A-verma", n=2, lam=[mpq(1), mpq(0)])
    assert monodromy(L, 0) == {((), ()): NormalPoly.const(L.space, 1)}
    M1 = monodromy(L, 1)
    for i, j in itertools.product(range(2), repeat=2):
        if L.entries[i][j].terms:
            assert M1[((i,), (j,))] == L.entries[i][j]
    M2 = monodromy(L, 2)
    assert M2[((0, 0), (0, 0))] == normal_mul(L.entries[0][0], L.entries[0][0])


def test_tensor_operator_json_roundtrip_and_order():
    T = transfer_plus(construct_lax("A-verma", n=2, lam=[mpq(1), mpq(0)]), TAU2, 2)
    d = T.to_json()
    assert TensorOperator.from_json(d) == T
    rows = [(tuple(e["row"]), tuple(e["col"])) for e in d["coeffs"]["x^0"]]
    assert rows == sorted(rows)


def _rand_op(r, N=2, K=2):
    ents = {}
    for I, J in itertools.product(itertools.product(range(K), repeat=N), repeat=2):
        if r.random() < 0.4:
            ents[(I, J)] = X * r.randint(-3, 3) + mpq(r.randint(-5, 5), r.randint(1, 3))
    return TensorOperator(N, K, ents)


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_tensor_operator_algebra(r):
    a, b, c = _rand_op(r), _rand_op(r), _rand_op(r)
    assert (a @ b) @ c == a @ (b @ c)
    assert a @ (b + c) == a @ b + a @ c
    B = b_mu(C2, (1, -1))
    A4 = _rand_op(r, 1, 4)
    B4 = _rand_op(r, 1, 4)
    assert (A4 @ B4).conjugate(B) == A4.conjugate(B) @ B4.conjugate(B)
    assert a.shift_x(1).shift_x(-1) == a


# traces

def test_n0_transfer_plus_is_coset_character():
    rng = random.Random(21)
    for alg, case in _alg_cases():
        t = mpq(1, 2) if case.kind == "spinor" and alg.family == "D" else 2
        for _ in range(10):
            tau = generic_tau(rng, alg, mpq(t).denominator)
            for el in enumerate_cosets(alg, case):
                L = lax_for_coset(alg, case, el, t)
                assert transfer_plus(L, tau, 0).scalar() == coset_character(alg, case, el, t, tau)


def test_n0_transfer_finite_is_weyl_character():
    rng = random.Random(22)
    for alg, case in _alg_cases():
        t = mpq(1, 2) if case.kind == "spinor" and alg.family == "D" else 1
        el = enumerate_cosets(alg, case)[0]
        mod = build_finite_module(lax_for_coset(alg, case, el, t))
        for _ in range(10):
            tau = generic_tau(rng, alg, mpq(t).denominator)
            assert transfer_finite(mod, tau, 0).scalar() == weyl_character(alg, el.highest_weight(t), tau)


def test_corrupted_twist_rejected():
    L = construct_lax("A-verma", n=2, lam=[mpq(0), mpq(0)])
    with pytest.raises(ValueError):
        transfer_plus(L, TwistSpec(TauPoint([mpq(2), mpq(2)])), 1)
    with pytest.raises(ValueError):
        TwistSpec(TauPoint([mpq(2), mpq(1, 2)])).check_generic(C2)
    with pytest.raises(ValueError):
        TwistSpec(TauPoint([mpq(1), mpq(3)])).check_generic(AlgebraType("B", 2))


def test_verma_n2_transfer_shape():
    T = transfer_plus(construct_lax("A-verma", n=2, lam=[mpq(0), mpq(0)]), TAU2, 1)
    assert T.degree == 1 and T.K == 2 and T.N == 1


# Q-operators

def _degenerate_families():
    for n in (2, 3):
        for a in range(1, n):
            for I in itertools.combinations(range(1, n + 1), a):
                yield construct_lax("A-deg", n=n, I=list(I))
                yield construct_lax("A-deg-bar", n=n, I=list(I))
    for f, r in [("C", 1), ("C", 2), ("D", 2), ("D", 3)]:
        for s in (1, -1):
            yield construct_lax(f + "-deg", r=r, sign=s)
    for f, r in [("B", 2), ("D", 2), ("D", 3)]:
        for w in (1, AlgebraType(f, r).K):
            yield construct_lax("BD-deg", alg=f, r=r, which=w)


def test_twist_compatibility_every_degenerate_family():
    for L in _degenerate_families():
        assert twist_condition_defects(L) == 0, (L.family, L.params)


def test_incompatible_twist_rejected():
    L = construct_lax("A-deg", n=2, I=[1])
    p = L.space.pairs[0]
    bad = L.with_entries(L.entries, qtwist={p: {0: 2}})
    with pytest.raises(ValueError, match="incompatible"):
        q_operator(bad, TAU2, 1)


def test_q_normalisation_and_prefactor_freedom():
    for L in list(_degenerate_families())[:12]:
        tau = TAU2 if L.alg.dim == 2 else TAU3
        assert q_operator(L, tau, 0).scalar() == 1
        assert q_operator(L, tau, 1) == q_operator(L, tau, 1, prefactor=2)


def test_q1_entry_against_float_series():
    L = construct_lax("A-deg", n=2, I=[1])
    tau = TauPoint([mpq(1, 2), mpq(1, 3)])
    w = q_weights(L, tau)
    assert all(abs(float(q)) < 1 for q in w.weight)
    Q = q_operator(L, tau, 1)
    M = monodromy(L, 1)
    norm = fock_trace_float(NormalPoly.const(L.space, 1), w, 200).real
    for e, c in M[((1,), (1,))].coefficients("x").items():
        fl = FloatScalar(fock_trace_float(c, w, 200).real / norm)
        assert fl.close_to(Q.entries[((1,), (1,))].coefficients("x")[e].constant_value(), 1e-9)


@pytest.mark.parametrize("fam,r", [("C", 1), ("C", 2), ("D", 2), ("D", 3)])
def test_weyl_generated_q_mu_two_routes(fam, r):
    tau = TAU3 if r == 3 else TAU2 if r == 2 else TauPoint([mpq(3)])
    for mu in itertools.product((1, -1), repeat=r):
        mubar = tuple(-m for m in mu)
        assert q_mu(fam, r, mu, tau, 1, start=-1) == q_mu(fam, r, mubar, tau, 1, start=1)


@pytest.mark.parametrize("fam,r", [("B", 2), ("D", 2), ("D", 3)])
def test_q_first_primed_equals_last_row(fam, r):
    tau = TAU3 if r == 3 else TAU2
    K = AlgebraType(fam, r).K
    assert q_bd(fam, r, K, tau, 1) == q_bd_last(fam, r, tau, 1)


def test_q_subset_equals_determinant():
    rng = random.Random(8)
    for n in (2, 3):
        tau = generic_tau(rng, AlgebraType("A", n))
        for a in range(2, n + 1):
            for I in itertools.combinations(range(1, n + 1), a):
                if a == n:
                    continue
                for N in (1, 2):
                    assert determinant_identity_check("qi", {"n": n, "I": list(I)}, tau, N).ok


# finite modules

def test_finite_module_dimensions():
    assert build_finite_module(construct_lax("A-rect", n=2, a=1, t=1)).dimension == 2
    assert build_finite_module(construct_lax("C", r=2, t=1)).dimension == 5
    assert build_finite_module(construct_lax("D-mu", r=3, mu=(1, 1, 1), t=mpq(1, 2))).dimension == 4
    mod = build_finite_module(construct_lax("A-rect", n=3, a=1, t=2))
    assert mod.basis[0] == {(0,) * len(mod.lax.space): 1}
    for (i, j), M in mod.generator_matrices.items():
        assert len(M) == mod.dimension


def test_non_dominant_label_rejected():
    with pytest.raises(ValueError):
        build_finite_module(construct_lax("A-rect", n=2, a=1, t=mpq(1, 2)))
    with pytest.raises(ValueError):
        build_finite_module(construct_lax("A-rect", n=2, a=1, t=-1))


def test_fundamental_finite_transfer_by_hand():
    """Trace of R(x+c) over the defining representation: (x+c)(tau1+tau2) I + diag(tau1, tau2)."""
    mod = build_finite_module(construct_lax("A-verma", n=2, lam=[mpq(1), mpq(0)]))
    T = transfer_finite(mod, TAU2, 1)
    s = TAU2.values[0] + TAU2.values[1]
    const = T.entries[((1,), (1,))].coefficients("x").get(0, Poly.const(0)).constant_value()
    c = (const - TAU2.values[1]) / s
    want = TensorOperator.identity(1, 2, (X + c) * s) + TensorOperator(1, 2, {((0,), (0,)): TAU2.values[0], ((1,), (1,)): TAU2.values[1]})
    assert T == want


def test_wrong_twist_order_is_detected():
    alg, case = A2, Case("rect", a=1)
    el = enumerate_cosets(alg, case)[0]
    lhs = transfer_finite(build_finite_module(lax_for_coset(alg, case, el, 2)), TauPoint([mpq(3), mpq(2)]), 1)
    rhs = continued_transfer(alg, case, 2, TAU2, 1)
    assert lhs.defect(rhs) > 0


# transfer-level identities

def test_bgg_examples():
    rep = bgg_identity_check(A2, Case("rect", a=1), 2, 1, TAU2)
    assert rep.ok and rep.details == {"summands": 2, "module_dim": 3}
    rep = bgg_identity_check(C2, Case("spinor"), 1, 1, TAU2)
    assert rep.ok and rep.details == {"summands": 4, "module_dim": 5}
    B2 = AlgebraType("B", 2)
    rep = bgg_identity_check(B2, Case("vector"), 1, 1, TAU2)
    assert rep.ok and rep.details["summands"] == 4
    assert [e.sign for e in enumerate_cosets(B2, Case("vector"))] == [1, -1, -1, 1]


def test_factorisation_examples():
    assert factorisation_identity_check("details-fact", {"n": 2, "lam": [1, 0]}, TAU2, 1).ok
    assert factorisation_identity_check("C", {"r": 2, "t": 1, "mu": (1, -1)}, TAU2, 1).ok
    assert factorisation_identity_check("D", {"r": 2, "t": 1, "mu": (1, 1)}, TAU2, 1).ok


def test_two_particle_hole_conventions_give_equal_traces():
    for n, I in [(2, [2]), (3, [2]), (3, [1, 3]), (3, [2, 3])]:
        tau = TAU2 if n == 2 else TAU3
        for t in (mpq(1), mpq(3, 2)):
            t_tau = TauPoint(tau.bases, 2)
            a = transfer_plus(construct_lax("A-I", n=n, I=I, t=t), t_tau, 2)
            b = transfer_plus(construct_lax("A-I'", n=n, I=I, t=t), t_tau, 2)
            assert a == b


def test_qq_examples_and_negative_control():
    assert qq_relation_check(2, [], 1, 2, 1, TAU2).ok
    assert qq_relation_check(3, [3], 1, 2, 1, TAU3).ok
    assert not qq_relation_check(2, [], 1, 2, 1, TAU2, flip=True).ok
    with pytest.raises(ValueError):
        qq_relation_check(3, [1], 1, 2, 1, TAU3)


def test_determinant_examples():
    assert determinant_identity_check("tdet", {"lam": [1, 0]}, TAU2, 1).ok
    assert determinant_identity_check("qi", {"n": 3, "I": [1, 3]}, TAU3, 1).ok
    assert determinant_identity_check("tdet", {"lam": [0, 0]}, TAU2, 1).ok


def test_commutativity_examples():
    Ta = transfer_plus(construct_lax("A-verma", n=2, lam=[mpq(0), mpq(0)]), TAU2, 2)
    Tb = transfer_plus(construct_lax("A-verma", n=2, lam=[mpq(2), mpq(-1)]), TAU2, 2)
    Tf = transfer_finite(build_finite_module(construct_lax("A-verma", n=2, lam=[mpq(1), mpq(0)])), TAU2, 2)
    Q1 = q_A(2, [1], TAU2, 2)
    assert commutativity_check([(Ta, Tb), (Q1, Tf)]).ok
    pairs = [(q_mu("C", 2, m, TAU2, 1), q_mu("C", 2, tuple(-v for v in m), TAU2, 1)) for m in itertools.product((1, -1), repeat=2)]
    assert commutativity_check(pairs).ok


def test_commutativity_negative_control():
    Q1 = q_A(2, [1], TAU2, 1)
    P = TensorOperator(1, 2, {((0,), (1,)): 1})
    assert not commutativity_check([(Q1, P)]).ok


def test_t_symmetry_examples():
    t = mpq(5, 7)
    assert t_symmetry_data(C2, Case("spinor"), t) == (-3 - t, Case("spinor"), -1)
    assert t_symmetry_check(C2, Case("spinor"), 1, TauPoint([mpq(2), mpq(3)], 7), t).ok
    D2 = AlgebraType("D", 2)
    t2, case2, s = t_symmetry_data(D2, Case("spinor", sector=1), mpq(2, 3))
    assert case2.sector == 1 and s == -1
    assert t_symmetry_check(D2, Case("spinor", sector=-1), 1, TauPoint([mpq(2), mpq(3)], 3), mpq(2, 3)).ok
    B2 = AlgebraType("B", 2)
    assert t_symmetry_data(B2, Case("vector"), 0)[2] == -1
    assert t_symmetry_check(B2, Case("vector"), 1, TauPoint([mpq(2), mpq(3)], 4), mpq(-3, 4)).ok


def test_character_level_t_symmetry_and_vanishing():
    rng = random.Random(31)
    for alg, case in _alg_cases():
        if alg.family == "A":
            continue
        for t in (mpq(5, 7), mpq(-2, 3)):
            tau = generic_tau(rng, alg, t.denominator)
            t2, case2, sign = t_symmetry_data(alg, case, t)
            assert truncated_bgg_character(alg, case, t, tau) == sign * truncated_bgg_character(alg, case2, t2, tau)
        from qbgg.transfer import vanishing_set

        for t in vanishing_set(alg, case):
            tau = generic_tau(rng, alg, t.denominator)
            assert truncated_bgg_character(alg, case, t, tau) == 0
            assert continued_transfer(alg, case, t, tau, 0).scalar() == 0


def test_vanishing_probe_is_informational():
    rep = expected_vanishing_probe(C2, Case("spinor"), 1, TAU2, -1)
    assert rep.status == "info" and "vanishes" in rep.details
    rep = expected_vanishing_probe(AlgebraType("B", 2), Case("vector"), 1, TAU2, -1)
    assert rep.status == "info"


@settings(max_examples=8, deadline=None)
@given(st.lists(st.fractions(min_value=mpq(1, 40), max_value=50, max_denominator=40), min_size=3, max_size=3, unique=True))
def test_property_qq_relation_random_twist(vals):
    tau = TauPoint([mpq(v.numerator, v.denominator) for v in vals])
    assert qq_relation_check(3, [], 1, 3, 1, tau).ok
    assert qq_relation_check(3, [2], 3, 1, 1, tau).ok


@settings(max_examples=6, deadline=None)
@given(st.integers(-25, 25), st.integers(1, 5), st.integers(0, 10**6))
def test_property_factorisation_any_t(p, q, seed):
    r = random.Random(seed)
    t = mpq(p, q)
    tau = generic_tau(r, C2, t.denominator)
    mu = (r.choice((1, -1)), r.choice((1, -1)))
    assert factorisation_identity_check("C", {"r": 2, "t": t, "mu": mu}, tau, 1).ok
