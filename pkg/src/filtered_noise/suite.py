"""Acceptance battery: one function per criterion, each returning a :class:`Criterion`.

Every check is seeded; the seed is part of the result so a run can be
replayed exactly.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from filtered_noise import fock, mfree
from filtered_noise.moments import (
    Leg,
    MomentModel,
    MomentSequence,
    Word,
    clt_limit,
    clt_normalized,
    closed_form_oracles,
    convolution_power,
    convolution_power_bruteforce,
    filtered_word_moment,
    filtered_word_moment_recursive,
    mfree_sample_moment,
    poisson_limit,
)
from filtered_noise.oracles import coarsest_adapted_bruteforce
from filtered_noise.partitions import (
    ColorFilterTuple,
    Filter,
    SetPartition,
    bell,
    catalan,
    coarsest_adapted,
    enumerate_partitions,
    double_factorial,
)

DEFAULT_SEED = 20240607


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return (f"criterion {self.number:>2} {'PASS' if self.passed else 'FAIL'}  "
                f"{self.name} ({self.seconds:.1f}s)")


def _timed(number: int, name: str, budget: float | None):
    def wrap(fn: Callable[..., tuple[bool, dict]]):
        def run(seed: int = DEFAULT_SEED) -> Criterion:
            t0 = time.perf_counter()
            ok, details = fn(seed)
            elapsed = time.perf_counter() - t0
            details = {"seed": seed, **details}
            if budget is not None:
                details["budget_seconds"] = budget
                ok = ok and elapsed < budget
            return Criterion(number, name, bool(ok), round(elapsed, 3), details)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def random_filter(rng: random.Random, max_color: int) -> Filter:
    kind = rng.randrange(4)
    if kind == 0:
        return Filter.all()
    if kind == 1:
        return Filter.empty()
    if kind == 2:
        return Filter.prefix(rng.randint(1, max_color + 1))
    return Filter.of(rng.sample(range(1, max_color + 1), rng.randint(0, max_color)))


def random_cf(rng: random.Random, n: int, max_color: int, filters=None) -> ColorFilterTuple:
    colors = tuple(rng.randint(1, max_color) for _ in range(n))
    if filters is None:
        flts = tuple(random_filter(rng, max_color) for _ in range(n))
    else:
        flts = tuple(rng.choice(filters) for _ in range(n))
    return ColorFilterTuple(colors, flts)


def random_rational(rng: random.Random, lo: int = -6, hi: int = 6) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, 7))


# --------------------------------------------------------------------------- #

@_timed(1, "coarsest adapted refinement", 30.0)
def criterion_1(seed: int):
    rng = random.Random(seed)
    R = SetPartition.parse("1,3,5|2,4")
    colors = (1, 1, 2, 1, 1)
    sigma = ColorFilterTuple.build(colors, ["p1", "p2", "p1", "p2", "p1"])
    tau = ColorFilterTuple.build(colors, ["p1", "p2", "p2", "p2", "p1"])
    got_sigma = str(coarsest_adapted(R, sigma))
    got_tau = str(coarsest_adapted(R, tau))
    examples_ok = (got_sigma == "{1}|{2}|{3}|{4}|{5}" and got_tau == "{1,5}|{2,4}|{3}")
    cases = mismatches = 0
    parts = {n: enumerate_partitions(n) for n in range(1, 8)}
    while cases < 10_000:
        n = rng.randint(1, 7)
        cf = random_cf(rng, n, rng.randint(1, 3))
        R = rng.choice(parts[n])
        cases += 1
        if coarsest_adapted_bruteforce(R, cf) != coarsest_adapted(R, cf):
            mismatches += 1
    return examples_ok and not mismatches, {
        "example_sigma": got_sigma, "example_tau": got_tau,
        "random_cases": cases, "mismatches": mismatches}


@_timed(2, "example word moments, two evaluators", None)
def criterion_2(seed: int):
    rng = random.Random(seed)
    trials = bad = 0
    for _ in range(200):
        s1 = MomentSequence.from_moments([random_rational(rng) for _ in range(4)])
        s2 = MomentSequence.from_moments([random_rational(rng) for _ in range(4)])
        model = MomentModel({1: s1, 2: s2})
        w_i = Word.build([1, 2, 1, 2], [1] * 4, ["p1", "p2", "p2", "p1"])
        w_ii = Word.build([1, 2, 1, 2], [1] * 4, ["p1", "p2", "p1", "p1"])
        want_i = s1[2] * s2[2]
        want_ii = s1[2] * s2[1] * s2[1]
        for w, want in ((w_i, want_i), (w_ii, want_ii)):
            trials += 1
            if not (filtered_word_moment(w, model) == filtered_word_moment_recursive(w, model) == want):
                bad += 1
    return bad == 0, {"trials": trials, "mismatches": bad}


@_timed(3, "convolution power vs brute force", 60.0)
def criterion_3(seed: int):
    rng = random.Random(seed)
    cases = bad = 0
    for _ in range(200):
        n = rng.randint(1, 5)
        cf = random_cf(rng, n, rng.randint(1, 3))
        seq = MomentSequence.from_moments([random_rational(rng) for _ in range(n)])
        cases += 1
        for N in range(1, 5):
            if convolution_power(N, cf, seq) != convolution_power_bruteforce(N, cf, seq):
                bad += 1
    return bad == 0, {"cases": cases, "N_values": [1, 2, 3, 4], "mismatches": bad}


@_timed(4, "limit laws in closed form", None)
def criterion_4(seed: int):
    out = {}
    out["clt_classical"] = [clt_limit(ColorFilterTuple.uniform(n, 1, Filter.all())) for n in (2, 4, 6)]
    out["clt_boolean"] = [clt_limit(ColorFilterTuple.uniform(n, 1, Filter.empty())) for n in (2, 4, 6)]
    out["poisson_bell"] = [int(poisson_limit(ColorFilterTuple.uniform(n, 1, Filter.all()), {1: 1}))
                           for n in (1, 2, 3, 4)]
    boolean_ok = all(
        poisson_limit(ColorFilterTuple.uniform(n, 1, Filter.empty()), {1: lam})
        == closed_form_oracles("boolean_poisson", n, lam) == lam * (1 + lam) ** (n - 1)
        for n in range(1, 7) for lam in (1, 2))
    ok = (out["clt_classical"] == [1, 3, 15] and out["clt_boolean"] == [1, 1, 1]
          and out["poisson_bell"] == [1, 2, 5, 15] == [bell(n) for n in (1, 2, 3, 4)]
          and boolean_ok)
    out["boolean_poisson_ok"] = boolean_ok
    return ok, out


CONVERGENCE_SET = [
    ("1,1", "all,all"),
    ("1,1,1,1", "all,all,all,all"),
    ("1,1,1,1", "empty,empty,empty,empty"),
    ("1,1,1,1,1,1", "all,all,all,all,all,all"),
    ("1,1,1,1,1,1", "empty,empty,empty,empty,empty,empty"),
    ("1,2,1,2", "p2,all,p2,all"),
    ("1,2,2,1,1,2", "all,p2,empty,p3,all,p2"),
    ("2,1,2,1,2,1", "p2,p3,all,empty,p2,all"),
    ("1,1,1", "all,all,all"),
    ("1,2,1,2,1", "all,p2,empty,all,p3"),
]


@_timed(5, "central limit convergence", None)
def criterion_5(seed: int):
    seq = MomentSequence.rademacher(6)
    rows = []
    ok = True
    for colors, filters in CONVERGENCE_SET:
        cf = ColorFilterTuple.parse(colors, filters)
        limit = clt_limit(cf)
        errs = [abs(float(clt_normalized(N, cf, seq)) - limit) for N in (10, 100, 1000)]
        decreasing = errs[0] >= errs[1] >= errs[2] and (errs[0] > errs[2] or errs[0] == 0)
        bounded = errs[2] <= 5 / 1000 * (limit + 1)
        ok = ok and decreasing and bounded
        rows.append({"colors": colors, "filters": filters, "limit": limit,
                     "errors": errs, "ok": decreasing and bounded})
    return ok, {"moments": "rademacher", "cases": rows}


@_timed(6, "m-free hierarchy", None)
def criterion_6(seed: int):
    table = {}
    ok = True
    for m in (1, 2, 3, 4):
        for p in (1, 2, 3):
            val = mfree_sample_moment(m, 2 * p)
            want = 1 if m == 1 else catalan(p) if m >= p else None
            if want is not None and val != want:
                ok = False
            entry = {"combinatorial": str(val)}
            if m <= 3:
                fock_val = mfree.semicircle_moments(m, p)
                entry["fock"] = fock_val
                if abs(fock_val - float(val)) > 1e-9:
                    ok = False
            table[f"m={m},p={p}"] = entry
    return ok, {"table": table}


@_timed(7, "operator identities on d=2, M=5, n_max=4", 120.0)
def criterion_7(seed: int):
    rng = np.random.default_rng(seed)
    space = fock.build_space(fock.Truncation(2, Fraction(1, 2), 5, 4))
    filters = [Filter.all(), Filter.empty(), Filter.prefix(2), Filter.prefix(3),
               Filter.prefix(4), Filter.of([2, 4])]

    def vec():
        return rng.normal(size=2) + 1j * rng.normal(size=2)

    commut = 0.0
    cases = 0
    for s in filters:
        for t in filters:
            for _ in range(2):
                k, l = (int(x) for x in rng.integers(1, 6, size=2))
                if rng.random() < 0.5:
                    l = k
                commut = max(commut, fock.verify_commutation(space, s, t, k, l, vec(), vec()))
                cases += 1
    cuntz = {}
    for m in (1, 2, 3, 4, None):
        cuntz[str(mfree.MParameter(m))] = mfree.verify_cuntz(space, m, vec(), vec())
    resolution = {str(mfree.MParameter(m)): mfree.verify_resolution(space, m)
                  for m in (1, 2, 3, 4, None)}
    literal = {str(mfree.MParameter(m)): mfree.verify_resolution(space, m, "literal")
               for m in (1, 2, 3)}
    ok = (commut <= 1e-10 and cases >= 50 and max(cuntz.values()) <= 1e-10
          and max(resolution.values()) <= 1e-10)
    return ok, {"basis_size": space.dim, "commutation_cases": cases, "commutation_residual": commut,
                "cuntz_residual": cuntz, "resolution_residual": resolution,
                "literal_reading_residual": literal, "m_inf_realized_as": space.M - 1}


def _random_pairing_legs(rng: random.Random, n: int, filters) -> list[Leg]:
    """Legs whose stars follow a random pairing (annihilator first), so the
    expectation has a chance to be nonzero."""
    free = list(range(n))
    rng.shuffle(free)
    stars, colors = [False] * n, [1] * n
    for a, b in zip(free[::2], free[1::2]):
        a, b = min(a, b), max(a, b)
        stars[b] = True
        colors[a] = colors[b] = rng.randint(1, 2)
    return [Leg(i, colors[i], rng.choice(filters), stars[i]) for i in range(n)]


@_timed(8, "vacuum expectations vs adapted pairings", None)
def criterion_8(seed: int):
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    space = fock.build_space(fock.Truncation(2, 1, 2, 6))
    filters = [Filter.all(), Filter.empty(), Filter.prefix(2), Filter.prefix(3)]
    worst = 0.0
    nonzero = 0
    words = 120
    for w in range(words):
        n = rng.randint(1, 6)
        if w % 2 == 0 and n % 2 == 0:
            legs = _random_pairing_legs(rng, n, filters)
        else:
            legs = [Leg(i, rng.randint(1, 2), rng.choice(filters), rng.random() < 0.5)
                    for i in range(n)]
        vectors = {i: nrng.normal(size=2) + 1j * nrng.normal(size=2) for i in range(n)}
        fv, cv, diff = fock.verify_pairing_formula(space, legs, vectors)
        worst = max(worst, diff)
        nonzero += abs(cv) > 1e-9
    return worst <= 1e-9, {"words": words, "nonzero": nonzero, "max_abs_diff": worst}


@_timed(9, "Lambda-process moments vs sum of t^blocks", None)
def criterion_9(seed: int):
    rng = random.Random(seed)
    space = fock.build_space(fock.Truncation(2, Fraction(1, 2), 2, 5))
    filters = [Filter.all(), Filter.empty(), Filter.prefix(2), Filter.prefix(3), Filter.of([2])]
    worst = 0.0
    cases = 0
    for n in range(1, 6):
        for t in (Fraction(1, 2), Fraction(1)):
            for _ in range(4):
                cf = random_cf(rng, n, 2, filters)
                _, _, diff = fock.verify_noise_moments(space, cf, t)
                worst = max(worst, diff)
                cases += 1
    return worst <= 1e-8, {"cases": cases, "max_abs_diff": worst}


@_timed(10, "free Fock decomposition", None)
def criterion_10(seed: int):
    space = fock.build_space(fock.Truncation(2, 1, 6, 5))
    D = mfree.d_basis(space)
    by_grade = {g: [i for i in D if space.grade[i] == g] for g in range(3)}
    sectors = [by_grade[0][0]] + by_grade[1][:2] + by_grade[2][:2]
    rep = mfree.verify_decomposition(space, sectors, words=50, seed=seed)
    ok = rep.passed() and len(set(sectors)) == 5 and rep.nonzero_expectations > 0
    return ok, {"sectors": [space.describe(i) for i in sectors],
                "orthogonality": rep.orthogonality, "oracle_diff": rep.oracle,
                "factor_rel_error": rep.factor, "words_per_sector": rep.words_per_sector,
                "nonzero_expectations": rep.nonzero_expectations,
                "m_inf_realized_as": rep.m_realized}


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_suite(seed: int = DEFAULT_SEED, only: list[int] | None = None) -> list[Criterion]:
    """Run criteria 1-10 (or the ``only`` subset) in order."""
    picked = CRITERIA if not only else [CRITERIA[i - 1] for i in only]
    return [c(seed) for c in picked]
