import random

import pytest

from qbgg.coeff import Poly, TauPoint, mpq
from qbgg.weyl import (
    AlgebraType,
    Case,
    SignedPerm,
    dot_action,
    enumerate_cosets,
    truncated_bgg_character,
    weyl_character,
    weyl_denominator_sides,
    weyl_dimension,
)

from conftest import generic_tau

T = Poly.var("t")


def _cases(alg):
    f = alg.family
    if f == "A":
        return [Case("rect", a=a) for a in range(1, alg.rank)]
    if f == "C":
        return [Case("spinor")]
    if f == "B":
        return [Case("vector")]
    return [Case("spinor", sector=1), Case("spinor", sector=-1), Case("vector")]


ALGS = [AlgebraType(f, r) for f, r in [("A", 2), ("A", 3), ("A", 4), ("B", 2), ("B", 3), ("C", 1), ("C", 2), ("C", 3), ("D", 2), ("D", 3)]]


def test_algebra_bounds():
    for f, r in [("A", 1), ("B", 1), ("C", 0), ("D", 1)]:
        with pytest.raises(ValueError):
            AlgebraType(f, r)
    assert AlgebraType("B", 2).K == 5 and AlgebraType("B", 2).kappa == mpq(3, 2)


def test_coset_examples():
    lens = {tuple(e.label): e.length for e in enumerate_cosets(AlgebraType("A", 3), Case("rect", a=1))}
    assert lens == {(1,): 0, (2,): 1, (3,): 2}
    lens = {tuple(e.label): e.length for e in enumerate_cosets(AlgebraType("C", 2), Case("spinor"))}
    assert lens == {(1, 1): 0, (1, -1): 1, (-1, 1): 2, (-1, -1): 3}
    lens = {tuple(e.label): e.length for e in enumerate_cosets(AlgebraType("D", 2), Case("spinor", sector=1))}
    assert lens == {(1, 1): 0, (-1, -1): 1}


def test_coset_sizes():
    from math import comb

    for alg in ALGS:
        for case in _cases(alg):
            els = enumerate_cosets(alg, case)
            r = alg.rank
            want = {"rect": comb(r, case.a or 0), "spinor": 2**r if alg.family == "C" else 2 ** (r - 1), "vector": 2 * r}[case.kind]
            assert len(els) == want
            assert [e.sign for e in els] == [(-1) ** e.length for e in els]


def test_inadmissible_case():
    with pytest.raises(ValueError):
        enumerate_cosets(AlgebraType("A", 3), Case("rect", a=3))
    with pytest.raises(ValueError):
        enumerate_cosets(AlgebraType("B", 2), Case("spinor"))


def test_dot_action_examples():
    A2 = AlgebraType("A", 2)
    s1 = SignedPerm((1, 1), (1, 0))
    assert dot_action(SignedPerm.identity(2), (mpq(1), mpq(0)), A2) == (1, 0)
    assert dot_action(s1, (mpq(1), mpq(0)), A2) == (-1, 2)
    C2 = AlgebraType("C", 2)
    flip = SignedPerm((-1, -1), (0, 1))
    assert dot_action(flip, (T, T), C2) == (-T - 4, -T - 2)


def test_c_coset_weight_for_full_flip():
    """The shortest representative for mu = (-,-) also swaps the entries, giving (-t-3, -t-3)."""
    C2 = AlgebraType("C", 2)
    el = [e for e in enumerate_cosets(C2, Case("spinor")) if e.label == (-1, -1)][0]
    assert el.highest_weight(T) == (-T - 3, -T - 3)


def test_highest_weight_is_dot_action():
    for alg in ALGS + [AlgebraType("C", 4), AlgebraType("D", 4), AlgebraType("B", 4)]:
        for case in _cases(alg):
            els = enumerate_cosets(alg, case)
            for t in (T, mpq(3), mpq(5, 2)):
                lam = tuple(b * t for b in els[0].base_weight)
                assert els[0].highest_weight(t) == lam
                for e in els:
                    assert e.highest_weight(t) == dot_action(e.weyl, lam, alg)


def test_weyl_character_examples():
    A2 = AlgebraType("A", 2)
    tau = TauPoint([2, 3])
    assert weyl_character(A2, (2, 0), tau) == 19
    C2 = AlgebraType("C", 2)
    assert weyl_character(C2, (1, 1), tau) == 6 + mpq(2, 3) + mpq(3, 2) + mpq(1, 6) + 1
    for alg in ALGS:
        assert weyl_character(alg, (0,) * alg.dim, generic_tau(random.Random(1), alg)) == 1


def test_degenerate_tau_names_root():
    with pytest.raises(ZeroDivisionError, match="e1-e2"):
        weyl_character(AlgebraType("A", 2), (1, 0), TauPoint([2, 2]))


def test_weyl_dimension_examples():
    assert weyl_dimension(AlgebraType("A", 3), (1, 0, 0)) == 3
    assert weyl_dimension(AlgebraType("C", 2), (1, 1)) == 5
    assert weyl_dimension(AlgebraType("B", 2), (1, 0)) == 5
    with pytest.raises(ValueError):
        weyl_dimension(AlgebraType("A", 2), (0, 1))


def test_truncated_examples():
    assert truncated_bgg_character(AlgebraType("A", 2), Case("rect", a=1), 2, TauPoint([2, 3])) == 19
    rng = random.Random(5)
    C2 = AlgebraType("C", 2)
    tau = generic_tau(rng, C2)
    assert truncated_bgg_character(C2, Case("spinor"), -1, tau) == 0


def test_weyl_denominator_identity():
    rng = random.Random(2)
    for alg in [a for a in ALGS if a.rank <= 3]:
        for _ in range(20):
            lhs, rhs = weyl_denominator_sides(alg, generic_tau(rng, alg))
            assert lhs == rhs


def test_truncated_equals_weyl_character():
    rng = random.Random(4)
    for alg in [a for a in ALGS if a.rank <= 3]:
        for case in _cases(alg):
            ts = (mpq(1, 2), mpq(1), mpq(3, 2)) if case.kind == "spinor" and alg.family == "D" else (1, 2, 3)
            for t in ts:
                root = mpq(t).denominator
                for _ in range(10):
                    tau = generic_tau(rng, alg, root)
                    hw = enumerate_cosets(alg, case)[0].highest_weight(t)
                    assert truncated_bgg_character(alg, case, t, tau) == weyl_character(alg, hw, tau)


def test_length_pairings():
    for r in (1, 2, 3, 4):
        els = {e.label: e.length for e in enumerate_cosets(AlgebraType("C", r), Case("spinor"))}
        for mu, l in els.items():
            assert l + els[tuple(-m for m in mu)] == r * (r + 1) // 2
    for r in (2, 3, 4):
        for s in (1, -1):
            els = {e.label: e.length for e in enumerate_cosets(AlgebraType("D", r), Case("spinor", sector=s))}
            other = {e.label: e.length for e in enumerate_cosets(AlgebraType("D", r), Case("spinor", sector=s * (-1) ** r))}
            for mu, l in els.items():
                assert l + other[tuple(-m for m in mu)] == r * (r - 1) // 2
    for alg in [AlgebraType("B", 2), AlgebraType("B", 3), AlgebraType("D", 2), AlgebraType("D", 3), AlgebraType("D", 4)]:
        els = {e.label: e.length for e in enumerate_cosets(alg, Case("vector"))}
        for k in range(1, alg.rank + 1):
            assert els[(k, False)] == k - 1
            assert els[(k, False)] + els[(k, True)] == alg.K - 2


def test_coset_json():
    el = enumerate_cosets(AlgebraType("C", 2), Case("spinor"))[3]
    assert el.to_json(mpq(1)) == {"tag": "mu=(-,-)", "length": 3, "hw": ["-4/1", "-4/1"]}
