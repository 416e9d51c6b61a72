"""Exact filtered moments, convolution powers and their limit laws.

Everything here is rational arithmetic (:class:`fractions.Fraction`); floats
only enter through :func:`pairing_expectation`, whose Gram data usually comes
from the Fock-space side.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from filtered_noise.partitions import (
    ColorFilterTuple,
    Filter,
    SetPartition,
    adapted_tally,
    catalan,
    double_factorial,
    enumerate_adapted,
    filtered_refinement,
)

#: Default cap on the number of terms a brute-force expansion may visit.
WORK_LIMIT = 10**7


class MomentOrderError(ValueError):
    """A moment beyond the stored order was requested."""


class MissingLabelError(KeyError):
    """A word references an algebra label the model does not define."""


class WorkLimitError(ValueError):
    """A brute-force expansion would exceed its work guard."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("moments are exact; pass ints, Fractions or 'p/q' strings")
    return Fraction(x)


@dataclass(frozen=True)
class MomentSequence:
    """Moments m_0 = 1, m_1, ..., m_K of a single variable."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(_as_fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals or vals[0] != 1:
            raise ValueError("a moment sequence starts with m_0 = 1")

    @classmethod
    def from_moments(cls, moments: Iterable) -> "MomentSequence":
        """Build from m_1, m_2, ... (m_0 = 1 is implied)."""
        return cls((Fraction(1),) + tuple(_as_fraction(v) for v in moments))

    @classmethod
    def parse(cls, text: str) -> "MomentSequence":
        return cls.from_moments(tok.strip() for tok in text.split(",") if tok.strip())

    @classmethod
    def rademacher(cls, max_order: int) -> "MomentSequence":
        """Symmetric +-1 variable: odd moments 0, even moments 1."""
        return cls.from_moments(1 - n % 2 for n in range(1, max_order + 1))

    @classmethod
    def gaussian(cls, max_order: int) -> "MomentSequence":
        return cls.from_moments(
            0 if n % 2 else double_factorial(n - 1) for n in range(1, max_order + 1))

    @classmethod
    def constant(cls, value, max_order: int) -> "MomentSequence":
        """m_n = value for every n >= 1 (a {0,1}-valued variable has this form)."""
        return cls.from_moments([value] * max_order)

    @property
    def max_order(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n: int) -> Fraction:
        if n < 0 or n > self.max_order:
            raise MomentOrderError(
                f"moment of order {n} requested but only {self.max_order} stored")
        return self.values[n]

    def to_strings(self) -> list[str]:
        return [str(v) for v in self.values[1:]]


@dataclass(frozen=True)
class MomentModel:
    """One moment sequence per algebra label."""

    sequences: Mapping[Hashable, MomentSequence] = field(default_factory=dict)

    def __getitem__(self, label) -> MomentSequence:
        try:
            return self.sequences[label]
        except KeyError:
            raise MissingLabelError(f"no moment sequence for label {label!r}") from None

    @classmethod
    def load(cls, path) -> "MomentModel":
        """Read ``{"label": ["m1", "m2", ...], ...}``; labels stay strings."""
        with open(path) as fh:
            raw = json.load(fh)
        return cls({str(k): MomentSequence.from_moments(str(v) for v in vals)
                    for k, vals in raw.items()})


@dataclass(frozen=True)
class Leg:
    """One factor of a word: a variable of algebra ``label`` in tensor slot
    ``color``, followed by the projection indexed by ``filter``."""

    label: Hashable
    color: int
    filter: Filter
    star: bool = False


@dataclass(frozen=True)
class Word:
    legs: tuple[Leg, ...]

    def __post_init__(self):
        object.__setattr__(self, "legs", tuple(self.legs))
        if not self.legs:
            raise ValueError("a word needs at least one leg")

    @classmethod
    def build(cls, labels: Sequence, colors: Sequence[int],
              filters: Sequence[Filter | str]) -> "Word":
        if not (len(labels) == len(colors) == len(filters)):
            raise ValueError("labels, colors and filters must have equal length")
        fs = [f if isinstance(f, Filter) else Filter.parse(f) for f in filters]
        return cls(tuple(Leg(l, int(k), f) for l, k, f in zip(labels, colors, fs)))

    def __len__(self) -> int:
        return len(self.legs)

    def color_filter_tuple(self) -> ColorFilterTuple:
        return ColorFilterTuple(tuple(leg.color for leg in self.legs),
                                tuple(leg.filter for leg in self.legs))


# --------------------------------------------------------------------------- #
#                               word moments                                  #
# --------------------------------------------------------------------------- #

def filtered_word_moment(word: Word, model: MomentModel) -> Fraction:
    """Product of block moments over the filtered refinement of the label partition."""
    labels = [leg.label for leg in word.legs]
    R = SetPartition.from_labels(labels)
    blocks = filtered_refinement(R, word.color_filter_tuple()).blocks
    out = Fraction(1)
    for block in blocks:
        out *= model[labels[block[0] - 1]][len(block)]
    return out


def filtered_word_moment_recursive(word: Word, model: MomentModel) -> Fraction:
    """Evaluate by peeling the first factor off, one step at a time.

    The first factor either stands alone (no later factor shares its label
    and color), is cut off from its next occurrence by an intervening
    foreign filter excluding its color, or is absorbed into that next
    occurrence.  Adjacent factors with equal label and color are merged
    first, intersecting their filters.
    """
    # (label, color, filter, power)
    legs = _merge_adjacent([(leg.label, leg.color, leg.filter, 1) for leg in word.legs])
    out = Fraction(1)
    while legs:
        l1, k1, _, pow1 = legs[0]
        r = next((i for i in range(1, len(legs)) if legs[i][:2] == (l1, k1)), None)
        separated = r is not None and any(
            legs[m][0] != l1 and not legs[m][2].contains(k1) for m in range(1, r))
        if r is None or separated:
            out *= model[l1][pow1]
            legs = legs[1:]
        else:
            lr, kr, fr, powr = legs[r]
            legs = legs[1:r] + [(lr, kr, fr, powr + pow1)] + legs[r + 1:]
        if not out:
            return out
    return out


def _merge_adjacent(legs):
    out = []
    for leg in legs:
        if out and out[-1][:2] == leg[:2]:
            label, color, flt, power = out[-1]
            out[-1] = (label, color, flt & leg[2], power + leg[3])
        else:
            out.append(leg)
    return out


def _slot_product(sites: Sequence, colors: Sequence[int], filters: Sequence[Filter],
                  moment: Callable[[Hashable, int], Fraction]) -> Fraction:
    """Evaluate a word slot by slot in the tensor-product model.

    Slot (s, c) sees the variable at every position with site s and color c,
    a projection at every position with a different site whose filter
    excludes c, and the identity elsewhere.  The Boolean extension turns
    each maximal run of variables between projections into one moment.
    """
    out = Fraction(1)
    for slot in dict.fromkeys(zip(sites, colors)):
        s, c = slot
        run = 0
        for site, color, flt in zip(sites, colors, filters):
            if site == s and color == c:
                run += 1
            elif site != s and not flt.contains(c) and run:
                out *= moment(s, run)
                run = 0
        if run:
            out *= moment(s, run)
        if not out:
            return out
    return out


def falling_factorial(N: int, p: int) -> int:
    out = 1
    for i in range(p):
        out *= N - i
    return out


# --------------------------------------------------------------------------- #
#                            convolution powers                               #
# --------------------------------------------------------------------------- #

def convolution_power(N: int, cf: ColorFilterTuple, seq: MomentSequence) -> Fraction:
    """N-fold filtered convolution power evaluated on X_{k_1}(s_1)...X_{k_n}(s_n).

    Sums (N)_p times the product of block moments over partitions with p
    blocks, each partition refined by colors and filters.
    """
    if N < 1:
        raise ValueError("N must be a positive integer")
    n = len(cf)
    if n > seq.max_order:
        # blocks can be as large as n
        seq[n]
    total = Fraction(0)
    for (p, profile), count in adapted_tally(cf, adapted_only=False, relative=True).items():
        ff = falling_factorial(N, p)
        if not ff:
            continue
        term = Fraction(count * ff)
        for _color, size in profile:
            term *= seq[size]
        total += term
    return total


def convolution_power_bruteforce(N: int, cf: ColorFilterTuple, seq: MomentSequence,
                                 *, work_limit: int = WORK_LIMIT) -> Fraction:
    """Same quantity, summed over every site assignment in {1..N}^n."""
    if N < 1:
        raise ValueError("N must be a positive integer")
    n = len(cf)
    if N**n > work_limit:
        raise WorkLimitError(f"{N}^{n} site tuples exceed the work guard {work_limit}")
    moment = lambda _site, k: seq[k]  # noqa: E731
    total = Fraction(0)
    for sites in itertools.product(range(N), repeat=n):
        total += _slot_product(sites, cf.colors, cf.filters, moment)
    return total


def clt_limit(cf: ColorFilterTuple) -> int:
    """Number of adapted pair partitions (0 for odd length)."""
    if len(cf) % 2:
        return 0
    return sum(adapted_tally(cf, adapted_only=True, pair_only=True).values())


def clt_normalized(N: int, cf: ColorFilterTuple, seq: MomentSequence):
    """Convolution power rescaled by N^{-n/2}.

    Exact (a Fraction) for even n.  For odd n the scale is irrational, so a
    nonzero value is returned as a float.
    """
    if seq[1] != 0 or seq[2] != 1:
        raise ValueError("the central limit normalization needs m_1 = 0 and m_2 = 1")
    n = len(cf)
    value = convolution_power(N, cf, seq)
    if n % 2 == 0:
        return value / N ** (n // 2)
    if value == 0:
        return Fraction(0)
    return float(value / N ** (n // 2)) / math.sqrt(N)


def poisson_limit(cf: ColorFilterTuple, lambdas: Mapping[int, object]) -> Fraction:
    """Sum over adapted partitions of the product of per-block color rates."""
    rates = {}
    for c in set(cf.colors):
        if c not in lambdas:
            raise ValueError(f"no rate given for color {c}")
        rates[c] = _as_fraction(lambdas[c])
    total = Fraction(0)
    for (_p, profile), count in adapted_tally(cf, adapted_only=True).items():
        term = Fraction(count)
        for color, _size in profile:
            term *= rates[color]
        total += term
    return total


def mfree_terms(m: int) -> list[tuple[int, Filter, int]]:
    """Signed (color, filter) summands of the m-free combination of one variable.

    Color k contributes X_k({1..k-1}) - X_k({1..k-2}); the subtracted term is
    absent for k = 1, where the telescoping projection is zero.
    """
    out = []
    for k in range(1, m + 1):
        out.append((k, Filter.prefix(k), 1))
        if k >= 2:
            out.append((k, Filter.prefix(k - 1), -1))
    return out


def mfree_sample_moment(m: int, n: int, kind: str = "clt", lam=None, *,
                        work_limit: int = 10**6) -> Fraction:
    """n-th limit moment of the m-free combination of filtered variables.

    ``kind`` is ``"clt"`` (central limit) or ``"poisson"`` (rate ``lam``).
    Each of the (2m-1)^n signed words is evaluated through the
    corresponding limit law and the results are summed with their signs.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    kind = kind.lower()
    if kind not in ("clt", "poisson"):
        raise ValueError(f"unknown limit kind {kind!r}")
    if kind == "poisson":
        if lam is None:
            raise ValueError("the Poisson limit needs a rate")
        lam = _as_fraction(lam)
    terms = mfree_terms(m)
    if len(terms) ** n > work_limit:
        raise WorkLimitError(f"{len(terms)}^{n} signed words exceed the work guard")
    if kind == "clt" and n % 2:
        return Fraction(0)
    total = Fraction(0)
    cache: dict = {}
    for choice in itertools.product(terms, repeat=n):
        sign = 1
        for _k, _f, s in choice:
            sign *= s
        key = tuple((k, f) for k, f, _ in choice)
        if key not in cache:
            cf = ColorFilterTuple(tuple(k for k, _ in key), tuple(f for _, f in key))
            if kind == "clt":
                cache[key] = Fraction(clt_limit(cf))
            else:
                cache[key] = poisson_limit(cf, {k: lam for k, _ in key})
        total += sign * cache[key]
    return total


# --------------------------------------------------------------------------- #
#                        pairings and white noise                             #
# --------------------------------------------------------------------------- #

def pairing_expectation(legs: Sequence[Leg], gram: Mapping[tuple, complex]) -> complex:
    """Sum over adapted pairings whose pairs read (annihilator, creator).

    ``legs[i].star`` marks a creator; ``legs[i].label`` names the vector it
    carries and ``gram[(a, b)]`` is the inner product <v_a, v_b>, antilinear
    in the first slot.  A pair contributes only when its earlier leg is an
    annihilator and its later leg a creator.
    """
    for (a, b), val in gram.items():
        if (b, a) in gram and abs(complex(gram[(b, a)]) - complex(val).conjugate()) > 1e-12:
            raise ValueError(f"gram entries ({a},{b}) and ({b},{a}) are not conjugate")

    def inner(a, b):
        if (a, b) in gram:
            return complex(gram[(a, b)])
        if (b, a) in gram:
            return complex(gram[(b, a)]).conjugate()
        raise ValueError(f"gram has no entry for ({a},{b})")

    n = len(legs)
    if n % 2:
        return 0j
    cf = ColorFilterTuple(tuple(leg.color for leg in legs), tuple(leg.filter for leg in legs))
    total = 0j
    for R in enumerate_adapted(cf, pair_only=True):
        term = 1 + 0j
        for alpha, beta in R.blocks:
            if legs[alpha - 1].star or not legs[beta - 1].star:
                term = 0j
                break
            term *= inner(legs[alpha - 1].label, legs[beta - 1].label)
        total += term
    return total


def white_noise_moment(generator: Callable[[tuple[int, ...], object], object],
                       cf: ColorFilterTuple, t):
    """Sum over adapted partitions of the product of ``generator(block, t)``."""
    total = 0
    for R in enumerate_adapted(cf):
        term = 1
        for block in R.blocks:
            term *= generator(block, t)
            if not term:
                break
        total += term
    return total


# --------------------------------------------------------------------------- #
#                             closed forms                                    #
# --------------------------------------------------------------------------- #

def _stirling2_row(n: int) -> list[int]:
    row = [1]  # S(0, 0)
    for i in range(1, n + 1):
        nxt = [0] * (i + 1)
        for k in range(1, i + 1):
            nxt[k] = k * (row[k] if k < len(row) else 0) + row[k - 1]
        row = nxt
    return row


def closed_form_oracles(kind: str, n: int, lam=None) -> Fraction:
    """Textbook moment formulas used as independent test oracles.

    Kinds: ``classical_gaussian``, ``boolean_gaussian``, ``free_gaussian``,
    ``classical_poisson``, ``boolean_poisson``, ``free_poisson``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return Fraction(1)
    if kind == "classical_gaussian":
        return Fraction(0 if n % 2 else double_factorial(n - 1))
    if kind == "boolean_gaussian":
        return Fraction(1 - n % 2)
    if kind == "free_gaussian":
        return Fraction(0 if n % 2 else catalan(n // 2))
    if kind in ("classical_poisson", "boolean_poisson", "free_poisson"):
        if lam is None:
            raise ValueError(f"{kind} needs a rate")
        lam = _as_fraction(lam)
        if kind == "boolean_poisson":
            return lam * (1 + lam) ** (n - 1)
        if kind == "classical_poisson":
            return sum((s * lam**k for k, s in enumerate(_stirling2_row(n))), Fraction(0))
        return sum((Fraction(math.comb(n, k) * math.comb(n, k - 1), n) * lam**k
                    for k in range(1, n + 1)), Fraction(0))
    raise ValueError(f"unsupported oracle kind {kind!r}")
