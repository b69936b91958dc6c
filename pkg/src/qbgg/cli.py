"""Command-line suite runner: JSON-lines reports, exit status 1 iff an acceptance-grade check fails."""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from typing import Iterator

from .coeff import FloatScalar, TauPoint, as_scalar, default_seed, format_scalar, lcm_denominators, make_rng, mpq, parse_scalar
from .lax import (
    construct_lax,
    lax_factorisation_check,
    lie_algebra_check,
    r_matrix_properties,
    renormalized_limit_check,
    rtt_check,
)
from .oscillator import NormalPoly, fock_trace_float
from .report import Report, timed
from .transfer import (
    TensorOperator,
    TwistSpec,
    bgg_identity_check,
    build_finite_module,
    commutativity_check,
    determinant_identity_check,
    expected_vanishing_probe,
    factorisation_identity_check,
    lax_for_coset,
    monodromy,
    plus_weights,
    q_A,
    q_bd,
    q_mu,
    q_operator,
    q_weights,
    qq_relation_check,
    t_symmetry_check,
    transfer_finite,
    transfer_plus,
    vanishing_set,
)
from .weyl import AlgebraType, Case, enumerate_cosets, truncated_bgg_character, weyl_character

SUITES = ("rtt", "lie", "laxfac", "limit", "bgg", "tviaqq", "qq", "det", "comm", "tsym", "vanish", "rmatrix")

FORMULAS = [
    ("RTT", "rtt --alg A|B|C|D --family ..."),
    ("R-matrix-A", "rmatrix --alg A"),
    ("BCD-Rmatrix", "rmatrix --alg B|C|D"),
    ("classical-Lax", "rtt --alg A --family verma"),
    ("glncom", "lie --alg A"),
    ("comC/comD", "lie --alg C|D"),
    ("G-free-term", "lie --alg B|D --quadratic"),
    ("facA", "laxfac --alg A"),
    ("factor-C", "laxfac --alg C"),
    ("factor-D", "laxfac --alg D"),
    ("factor-BD", "laxfac --alg B|D --quadratic"),
    ("renormalized-limit", "limit --alg A|C|D, limit --alg B|D --quadratic"),
    ("transfer-A", "bgg --alg A"),
    ("transfer-C", "bgg --alg C"),
    ("transfer-Dspin", "bgg --alg D --case spinor"),
    ("transfer-BD", "bgg --alg B|D --case vector"),
    ("details-fact", "tviaqq --kind details-fact"),
    ("T-via-QQ A-type", "tviaqq --alg A"),
    ("T-via-QQ C-type", "tviaqq --alg C"),
    ("T-via-QQ D-type", "tviaqq --alg D"),
    ("T-via-QQ BD-type", "tviaqq --alg B|D --quadratic"),
    ("qq-relation", "qq --alg A"),
    ("Tdet", "det --kind tdet"),
    ("QI", "det --kind qi"),
    ("TT/QT/QQ-commutativity", "comm --alg A|C|D|B"),
    ("t-symmetry C/D/BD", "tsym --alg C|D|B"),
    ("vanishing (expected)", "vanish --alg C|D|B"),
    ("Weyl character", "char"),
    ("Fock trace", "trace"),
]


class UsageError(ValueError):
    pass


# argument parsing

def _int_list(s):
    return [int(v) for v in str(s).split(",") if v.strip() != ""] if s not in (None, "") else []


def _mu(s):
    out = []
    for v in str(s).split(","):
        v = v.strip()
        out.append(-1 if v in ("-", "-1") else 1)
    return tuple(out)


def _q_list(s):
    if s is None:
        return None
    if isinstance(s, (list, tuple)):
        return [parse_scalar(str(v)) for v in s]
    return [parse_scalar(v.strip()) for v in str(s).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qbgg", description="Exact verification of oscillator Lax, transfer and Q-operator identities.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--alg", choices=list("ABCD"))
        sp.add_argument("--n", type=int, help="gl_n rank (type A)")
        sp.add_argument("--r", type=int, help="rank (types B/C/D)")
        sp.add_argument("--K", type=int, help="defining dimension (types B/D)")
        sp.add_argument("--a", type=int)
        sp.add_argument("--I", help="comma-separated subset")
        sp.add_argument("--i", type=int)
        sp.add_argument("--j", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--lam", help="comma-separated weight")
        sp.add_argument("--mu", help="comma-separated signs")
        sp.add_argument("--sign", type=int)
        sp.add_argument("--which", type=int)
        sp.add_argument("--case", choices=["rect", "spinor", "vector"])
        sp.add_argument("--sector", type=int, choices=[1, -1])
        sp.add_argument("--t", help="label(s), comma-separated rationals")
        sp.add_argument("--N", type=int)
        sp.add_argument("--tau", help="comma-separated twist bases")
        sp.add_argument("--root", type=int, help="tau_i = base_i ** root (default: lcm of label denominators)")
        sp.add_argument("--samples", type=int, help="random twist points per instance")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--quadratic", action="store_true", default=None)
        sp.add_argument("--config", help="JSON file mirroring the flags; flags win")
        sp.add_argument("--out", help="write JSON lines here instead of stdout")
        sp.add_argument("--no-timing", action="store_true", default=None, help="report elapsed_ms as 0")

    c = sub.add_parser("check", help="run a verification suite")
    c.add_argument("suite", choices=SUITES)
    common(c)
    c.add_argument("--family")
    c.add_argument("--kind")
    c.add_argument("--side", type=int, choices=[1, 2])
    c.add_argument("--flip", action="store_true", default=None, help="negative control: negate one term")

    ch = sub.add_parser("char", help="character of the finite module via the alternating coset sum")
    common(ch)
    ch.add_argument("--oracle", action="store_true", default=None, help="add a floating-point cross-check")

    tr = sub.add_parser("trace", help="print a transfer matrix or Q-operator as JSON")
    common(tr)
    tr.add_argument("--family", required=False, help="Lax family name")
    tr.add_argument("--kind", choices=["plus", "q", "finite"])
    tr.add_argument("--oracle", action="store_true", default=None, help="add a floating partial-sum cross-check")

    sub.add_parser("list", help="formula-to-check index")
    return p


def _apply_config(args) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    for k, v in cfg.items():
        k = k.replace("-", "_")
        if k in ("command", "suite", "config"):
            continue
        if not hasattr(args, k):
            raise UsageError(f"unknown config key {k!r}")
        if getattr(args, k) is None:
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            setattr(args, k, v)


# shared helpers

def _alg(args) -> AlgebraType:
    f = args.alg
    if f is None:
        raise UsageError("--alg is required")
    if f == "A":
        if args.n is None:
            raise UsageError("type A needs --n")
        return AlgebraType("A", args.n)
    r = args.r
    if args.K is not None:
        if f == "B" and args.K % 2 == 0 or f in "CD" and args.K % 2 == 1:
            raise UsageError(f"K={args.K} has the wrong parity for type {f}")
        rk = args.K // 2
        if r is not None and r != rk:
            raise UsageError("--K and --r disagree")
        r = rk
    if r is None:
        raise UsageError(f"type {f} needs --r (or --K)")
    return AlgebraType(f, r)


def _case(args, alg: AlgebraType) -> list[Case]:
    f = alg.family
    if f == "A":
        a = args.a
        if a is None and args.I:
            a = len(_int_list(args.I))
        if a is None:
            return [Case("rect", a=a) for a in range(1, alg.rank)]
        return [Case("rect", a=a)]
    if f == "C":
        return [Case("spinor")]
    if f == "B":
        return [Case("vector")]
    kind = args.case or ("vector" if args.quadratic else "spinor")
    if kind == "vector":
        return [Case("vector")]
    if kind != "spinor":
        raise UsageError("type D supports the spinor and vector cases")
    return [Case("spinor", sector=args.sector)] if args.sector else [Case("spinor", sector=1), Case("spinor", sector=-1)]


def _generic_ok(alg: AlgebraType):
    def ok(vals):
        try:
            TwistSpec(TauPoint.from_values(vals)).check_generic(alg)
        except ValueError:
            return False
        return True

    return ok


class Ctx:
    def __init__(self, args):
        self.args = args
        self.seed = int(args.seed) if args.seed is not None else default_seed()
        self.rng = make_rng(self.seed)

    def taus(self, alg: AlgebraType, labels=(), default_samples: int = 1) -> list[TauPoint]:
        a = self.args
        root = a.root or lcm_denominators([as_scalar(x) for x in labels if x is not None])
        if a.tau:
            bases = _q_list(a.tau)
            if len(bases) != alg.dim:
                raise UsageError(f"--tau needs {alg.dim} values")
            pt = TauPoint(bases, root)
            TwistSpec(pt).check_generic(alg)
            return [pt]
        n = a.samples or default_samples
        return [TauPoint.sample(self.rng, alg.dim, root, ok=_generic_ok(alg)) for _ in range(n)]

    def random_t(self, count: int) -> list[mpq]:
        out = []
        while len(out) < count:
            t = mpq(self.rng.randint(-30, 30), self.rng.randint(2, 9))
            if t.denominator != 1 and t not in out:
                out.append(t)
        return out

    def ts(self, default=None, count: int = 0) -> list:
        v = _q_list(self.args.t)
        if v:
            return v
        if default is not None:
            return list(default)
        return self.random_t(count)


def _tag(rep: Report, ctx: Ctx) -> Report:
    rep.seed = ctx.seed
    return rep


def _usage_report(suite: str, why: str) -> Report:
    rep = Report(suite, "-", {}, status="fail")
    rep.fail(why)
    return rep


# suites

def _lax_family(args, alg: AlgebraType):
    f = alg.family
    fam = args.family
    t = _q_list(args.t)
    t = t[0] if t else None
    quad = f == "B" or (f == "D" and args.quadratic)
    if f == "A":
        fam = fam or "verma"
        n = alg.rank
        if fam == "verma":
            lam = _q_list(args.lam) or [mpq(0)] * n
            return construct_lax("A-verma", n=n, lam=lam)
        if fam == "rect":
            return construct_lax("A-rect", n=n, a=args.a or 1, t=t)
        if fam in ("I", "I-prime"):
            return construct_lax("A-I" if fam == "I" else "A-I'", n=n, I=_int_list(args.I), t=t)
        if fam in ("deg", "deg-bar"):
            return construct_lax("A-" + fam, n=n, I=_int_list(args.I))
        if fam == "partonic":
            return construct_lax("A-partonic", n=n, i=args.i or 1)
        raise UsageError(f"unknown type A family {fam!r}")
    if quad:
        fam = fam or "quadratic"
        if fam == "quadratic":
            return construct_lax("BD", alg=f, r=alg.rank, t=t)
        if fam == "quadratic-k":
            return construct_lax("BD-k", alg=f, r=alg.rank, k=args.k or 1, t=t)
        if fam == "quadratic-deg":
            return construct_lax("BD-deg", alg=f, r=alg.rank, which=args.which or 1)
        raise UsageError(f"unknown quadratic family {fam!r}")
    fam = fam or "nondeg"
    if fam == "nondeg":
        return construct_lax(f, r=alg.rank, t=t)
    if fam == "mu":
        return construct_lax(f + "-mu", r=alg.rank, mu=_mu(args.mu), t=t)
    if fam == "deg":
        return construct_lax(f + "-deg", r=alg.rank, sign=args.sign or 1)
    raise UsageError(f"unknown type {f} family {fam!r}")


def _fac_cases(args, alg: AlgebraType) -> list[dict]:
    f = alg.family
    if f == "A":
        if args.I:
            return [{"type": "A", "n": alg.rank, "I": _int_list(args.I)}]
        if args.a:
            return [{"type": "A", "n": alg.rank, "a": args.a}]
        return [{"type": "A", "n": alg.rank, "a": a} for a in range(1, alg.rank)]
    if f == "B" or (f == "D" and args.quadratic):
        return [{"type": "BD", "alg": f, "r": alg.rank}]
    return [{"type": f, "r": alg.rank}]


def run_check(args, ctx: Ctx) -> Iterator[Report]:
    s = args.suite
    if s == "rmatrix":
        yield r_matrix_properties(_alg(args))
        return
    alg = None if s == "det" and args.alg is None else _alg(args)
    if s in ("rtt", "lie"):
        L = _lax_family(args, alg)
        yield rtt_check(L) if s == "rtt" else lie_algebra_check(L)
        return
    if s == "laxfac":
        for c in _fac_cases(args, alg):
            yield lax_factorisation_check(c)
        return
    if s == "limit":
        for c in _fac_cases(args, alg):
            if c["type"] == "A" and "I" in c:
                raise UsageError("the limit suite takes --a, not --I")
            for side in [args.side] if args.side else [1, 2]:
                yield renormalized_limit_check({**c, "side": side})
        return
    N = 1 if args.N is None else args.N
    if s == "bgg":
        for case in _case(args, alg):
            for t in ctx.ts(default=[1]):
                for tau in ctx.taus(alg, [t]):
                    yield _tag(bgg_identity_check(alg, case, t, N, tau), ctx)
        return
    if s == "tviaqq":
        yield from _run_tviaqq(args, ctx, alg, N)
        return
    if s == "qq":
        if alg.family != "A":
            raise UsageError("the QQ-relation suite is type A only")
        n = alg.rank
        if args.i is not None and args.j is not None:
            cases = [(_int_list(args.I), args.i, args.j)]
        else:
            cases = []
            for size in range(n - 1):
                for I in itertools.combinations(range(1, n + 1), size):
                    rest = [v for v in range(1, n + 1) if v not in I]
                    for i, j in itertools.permutations(rest, 2):
                        cases.append((list(I), i, j))
        tau = ctx.taus(alg)[0]
        for I, i, j in cases:
            yield _tag(qq_relation_check(n, I, i, j, N, tau, flip=bool(args.flip)), ctx)
        return
    if s == "det":
        kind = args.kind or ("tdet" if args.lam else "qi")
        if kind == "tdet":
            lam = _q_list(args.lam)
            if not lam:
                raise UsageError("det --kind tdet needs --lam")
            a2 = AlgebraType("A", len(lam))
            tau = ctx.taus(a2)[0]
            yield _tag(determinant_identity_check("tdet", {"lam": lam}, tau, N), ctx)
        elif kind == "qi":
            if alg is None or alg.family != "A":
                raise UsageError("det --kind qi needs --alg A --n")
            Is = [_int_list(args.I)] if args.I else [list(c) for c in itertools.combinations(range(1, alg.rank + 1), args.a or 2)]
            tau = ctx.taus(alg)[0]
            for I in Is:
                yield _tag(determinant_identity_check("qi", {"n": alg.rank, "I": I}, tau, N), ctx)
        else:
            raise UsageError("--kind must be tdet or qi")
        return
    if s == "comm":
        yield from _run_comm(args, ctx, alg, N if args.N is not None else 2)
        return
    if s == "tsym":
        for case in _case(args, alg):
            for t in ctx.ts(count=3):
                for tau in ctx.taus(alg, [t]):
                    yield _tag(t_symmetry_check(alg, case, N, tau, t), ctx)
        return
    if s == "vanish":
        for case in _case(args, alg):
            for t in ctx.ts(default=vanishing_set(alg, case)):
                for tau in ctx.taus(alg, [t]):
                    rep = expected_vanishing_probe(alg, case, N, tau, t)
                    if N == 0:
                        rep.mode = "coefficient-wise"
                        rep.status = "pass" if rep.details["vanishes"] else "fail"
                    yield _tag(rep, ctx)
        return
    raise UsageError(f"unknown suite {s!r}")


def _run_tviaqq(args, ctx: Ctx, alg: AlgebraType, N: int) -> Iterator[Report]:
    kind = args.kind
    if kind is None:
        if alg.family == "A":
            kind = "details-fact" if args.lam else "A"
        elif alg.family == "B" or args.quadratic or args.case == "vector":
            kind = "BD"
        else:
            kind = alg.family
    f, r = alg.family, alg.rank
    jobs = []
    if kind == "details-fact":
        lam = _q_list(args.lam) or [mpq(0)] * alg.rank
        jobs = [({"n": len(lam), "lam": lam}, [])]
    elif kind == "A":
        Is = [_int_list(args.I)] if args.I else [list(c) for a in ([args.a] if args.a else range(1, r)) for c in itertools.combinations(range(1, r + 1), a)]
        jobs = [({"n": r, "I": I}, None) for I in Is]
    elif kind in ("C", "D"):
        mus = [_mu(args.mu)] if args.mu else list(itertools.product((1, -1), repeat=r))
        if kind == "D" and args.sector and not args.mu:
            mus = [m for m in mus if (1 if m.count(-1) % 2 == 0 else -1) == args.sector]
        jobs = [({"r": r, "mu": tuple(m)}, None) for m in mus]
    elif kind == "BD":
        ks = [args.k] if args.k else list(range(1, r + 1)) + list(range(alg.K + 1 - r, alg.K + 1))
        jobs = [({"alg": f, "r": r, "k": k}, None) for k in ks]
    else:
        raise UsageError(f"unknown tviaqq kind {kind!r}")
    ts = [None] if kind == "details-fact" else ctx.ts(count=2)
    for params, _ in jobs:
        for t in ts:
            p = dict(params) if t is None else {**params, "t": t}
            a2 = AlgebraType("A", p["n"]) if kind == "details-fact" else alg
            labels = list(p.get("lam", [])) + ([t] if t is not None else [])
            for tau in ctx.taus(a2, labels):
                yield _tag(factorisation_identity_check(kind, p, tau, N), ctx)


def _run_comm(args, ctx: Ctx, alg: AlgebraType, N: int) -> Iterator[Report]:
    f, r = alg.family, alg.rank
    if f == "A":
        n = r
        lam1 = _q_list(args.lam) or [mpq(0)] * n
        lam2 = [mpq(2)] + [mpq(-1)] + [mpq(0)] * (n - 2)
        fund = [mpq(1)] + [mpq(0)] * (n - 1)
        tau = ctx.taus(alg, lam1)[0]
        Ta = transfer_plus(construct_lax("A-verma", n=n, lam=lam1), tau, N)
        Tb = transfer_plus(construct_lax("A-verma", n=n, lam=lam2), tau, N)
        Tf = transfer_finite(build_finite_module(construct_lax("A-verma", n=n, lam=fund)), tau, N)
        Qs = [q_A(n, [i], tau, N) for i in range(1, n + 1)]
        params = {"n": n, "N": N, "tau": tau.to_json()}
        yield _tag(commutativity_check([(Ta, Tb)], "A: T+ vs T+", params), ctx)
        yield _tag(commutativity_check([(Q, Tf) for Q in Qs], "A: Q_i vs fundamental T", params), ctx)
        yield _tag(commutativity_check(list(itertools.combinations(Qs, 2)) + [(Q, Ta) for Q in Qs], "A: Q_i vs Q_j and T+", params), ctx)
        return
    tau = ctx.taus(alg)[0]
    params = {"r": r, "N": N, "tau": tau.to_json()}
    if f == "B" or args.quadratic or args.case == "vector":
        K = alg.K
        idx = list(range(1, r + 1)) + list(range(K + 1 - r, K + 1))
        Qs = {k: q_bd(f, r, k, tau, N) for k in idx}
        T = transfer_plus(construct_lax("BD", alg=f, r=r, t=1), tau, N)
        pairs = [(Qs[k], Qs[K + 1 - k]) for k in range(1, r + 1)] + [(Q, T) for Q in Qs.values()]
        yield _tag(commutativity_check(pairs, f"{f}: Q_k vs Q_k' and T+", params), ctx)
        return
    mus = list(itertools.product((1, -1), repeat=r))
    Qs = {m: q_mu(f, r, m, tau, N) for m in mus}
    T = transfer_plus(construct_lax(f, r=r, t=1), tau, N)
    pairs = [(Qs[m], Qs[tuple(-v for v in m)]) for m in mus] + [(Q, T) for Q in Qs.values()]
    yield _tag(commutativity_check(pairs, f"{f}: Q_mu vs Q_mubar and T+", params), ctx)


def run_char(args, ctx: Ctx) -> Iterator[Report]:
    alg = _alg(args)
    ts = ctx.ts(default=[1])
    for case in _case(args, alg):
        for t in ts:
            for tau in ctx.taus(alg, [t]):
                rep = Report("char", str(alg), {"case": str(case), "t": format_scalar(as_scalar(t)), "tau": tau.to_json()})
                with timed(rep):
                    els = enumerate_cosets(alg, case)
                    hw = els[0].highest_weight(t)
                    chi = weyl_character(alg, hw, tau)
                    bgg = truncated_bgg_character(alg, case, t, tau)
                    rep.details["value"] = format_scalar(chi)
                    if bgg != chi:
                        rep.fail(f"coset sum {format_scalar(bgg)} differs from the Weyl character")
                    try:
                        mod = build_finite_module(lax_for_coset(alg, case, els[0], t))
                    except ValueError as e:
                        rep.details["module"] = f"skipped: {e}"
                    else:
                        if mod.character(tau) != chi:
                            rep.fail("finite-module trace differs from the Weyl character")
                        rep.details["dimension"] = mod.dimension
                    if args.oracle:
                        fl = sum((FloatScalar(el.sign) * FloatScalar(_float_coset(alg, case, el, t, tau)) for el in els), FloatScalar(0))
                        rep.details["oracle"] = {"float": repr(fl.value.real), "agrees": fl.close_to(chi, 1e-9)}
                yield _tag(rep, ctx)


def _float_coset(alg, case, el, t, tau):
    from .weyl import coset_character

    return float(coset_character(alg, case, el, t, tau))


def run_trace(args, ctx: Ctx) -> Iterator[Report]:
    from .lax import FAMILIES

    fam = args.family
    if fam not in FAMILIES:
        raise UsageError(f"--family must be one of {', '.join(FAMILIES)}")
    readers = {
        "I": lambda: _int_list(args.I) if args.I else None,
        "lam": lambda: _q_list(args.lam),
        "mu": lambda: _mu(args.mu) if args.mu else None,
        "t": lambda: (_q_list(args.t) or [None])[0],
    }
    params = {}
    for key in FAMILIES[fam]:
        v = readers[key]() if key in readers else getattr(args, key)
        if v is None and key == "t":
            raise UsageError("traces need a numeric --t")
        if v is None:
            raise UsageError(f"family {fam} needs --{key}")
        params[key] = v
    L = construct_lax(fam, **params)
    N = 1 if args.N is None else args.N
    kind = args.kind or ("q" if L.degenerate else "plus")
    labels = [v for v in params.get("lam", [])] + ([params["t"]] if params.get("t") is not None else [])
    tau = ctx.taus(L.alg, labels)[0]
    rep = Report("trace", fam, {**{k: _js(v) for k, v in params.items()}, "kind": kind, "N": N, "tau": tau.to_json()})
    rep.status = "info"
    with timed(rep):
        if kind == "plus":
            w = plus_weights(L, tau)
            T = transfer_plus(L, tau, N)
        elif kind == "q":
            w = q_weights(L, tau)
            T = q_operator(L, tau, N)
        elif kind == "finite":
            w = None
            T = transfer_finite(build_finite_module(L), tau, N)
        else:
            raise UsageError("--kind must be plus, q or finite")
        rep.details["operator"] = T.to_json()
        if args.oracle and w is not None:
            rep.details["oracle"] = _trace_oracle(L, N, w, T, kind)
    yield _tag(rep, ctx)


def _js(v):
    if isinstance(v, (list, tuple)):
        return [_js(x) for x in v]
    if isinstance(v, int):
        return v
    try:
        return format_scalar(as_scalar(v))
    except (TypeError, ValueError):
        return str(v)


def _trace_oracle(L, N: int, w, T: TensorOperator, kind: str) -> dict:
    if any(abs(float(q)) >= 1 for q in w.weight):
        return {"status": "skipped", "why": "some |q_p| >= 1, the partial sums do not converge"}
    qmax = max((abs(float(q)) for q in w.weight), default=0.0)
    cutoff = max(60, int(40 / -math.log(qmax)) + 20) if qmax > 0 else 60
    norm = 1.0
    if kind == "q":
        norm = fock_trace_float(NormalPoly.const(L.space, 1), w, cutoff).real
    worst = 0.0
    for key, op in monodromy(L, N).items():
        exact = T.entries.get(key)
        for e, c in op.coefficients("x").items():
            fl = fock_trace_float(c, w, cutoff).real / norm
            c_ex = exact.coefficients("x").get(e) if exact is not None else None
            ex = float(c_ex.constant_value()) if c_ex is not None else 0.0
            worst = max(worst, abs(fl - ex) / max(1.0, abs(ex)))
    return {"status": "pass" if worst <= 1e-9 else "fail", "max_rel_err": f"{worst:.3e}", "cutoff": cutoff}


# entry point

def _emit(rep: Report, fh, timing: bool) -> None:
    fh.write(json.dumps(rep.to_json(timing=timing), sort_keys=False, separators=(",", ":")) + "\n")
    fh.flush()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        for name, how in FORMULAS:
            print(f"{name} → {how}")
        return 0
    failed = False
    try:
        _apply_config(args)
        ctx = Ctx(args)
        gen = {"check": run_check, "char": run_char, "trace": run_trace}[args.command](args, ctx)
        fh = open(args.out, "w") if args.out else sys.stdout
        try:
            for rep in gen:
                _emit(rep, fh, not args.no_timing)
                failed |= rep.status == "fail"
        finally:
            if args.out:
                fh.close()
    except (ValueError, ArithmeticError) as e:
        parser.exit(2, f"qbgg: error: {e}\n")
    except BrokenPipeError:
        # reader closed early, e.g. piped into head
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1 if failed else 0
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
