"""Set partitions of {1..n} decorated by colors and filters.

A filter is a set of colors.  A partition is *adapted* to a color tuple and a
filter tuple when every block is monochromatic and no position lying strictly
between two elements of a block carries a filter that excludes the block color.

Positions are 1-based throughout the public API.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from filtered_noise import _backend

#: Largest ground set accepted by the enumerators.  Bell(12) is about 4.2M.
MAX_ENUMERATION = 12


class SizeLimitError(ValueError):
    """An enumeration request exceeds the configured size guard."""


def _guard(n: int, limit: int | None) -> None:
    limit = MAX_ENUMERATION if limit is None else limit
    if n < 0:
        raise ValueError(f"ground set size must be nonnegative, got {n}")
    if n > limit:
        raise SizeLimitError(f"n={n} exceeds the enumeration guard ({limit})")


# --------------------------------------------------------------------------- #
#                                   filters                                   #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Filter:
    """A set of colors, or the set of all colors when ``members`` is None."""

    members: frozenset[int] | None = None

    @classmethod
    def all(cls) -> "Filter":
        return cls(None)

    @classmethod
    def empty(cls) -> "Filter":
        return cls(frozenset())

    @classmethod
    def prefix(cls, r: int) -> "Filter":
        """The filter {1, ..., r-1}; ``prefix(1)`` (and ``prefix(0)``) is empty."""
        return cls(frozenset(range(1, max(r, 1))))

    @classmethod
    def of(cls, colors: Iterable[int]) -> "Filter":
        colors = frozenset(int(c) for c in colors)
        if any(c < 1 for c in colors):
            raise ValueError("colors are positive integers")
        return cls(colors)

    @classmethod
    def parse(cls, text: str) -> "Filter":
        """Parse ``all``, ``empty``, ``p<r>`` or an explicit set ``{1,3}``."""
        s = text.strip().lower()
        if s in ("all", "n", "*"):
            return cls.all()
        if s in ("empty", "none", "{}"):
            return cls.empty()
        if s.startswith("p") and s[1:].isdigit():
            return cls.prefix(int(s[1:]))
        if s.startswith("{") and s.endswith("}"):
            body = s[1:-1].strip()
            if not body:
                return cls.empty()
            return cls.of(int(tok) for tok in body.split(","))
        raise ValueError(f"cannot parse filter literal {text!r}")

    @property
    def is_all(self) -> bool:
        return self.members is None

    def contains(self, color: int) -> bool:
        return self.members is None or color in self.members

    __contains__ = contains

    def intersect(self, other: "Filter") -> "Filter":
        if self.members is None:
            return other
        if other.members is None:
            return self
        return Filter(self.members & other.members)

    __and__ = intersect

    def union(self, other: "Filter") -> "Filter":
        if self.members is None or other.members is None:
            return Filter.all()
        return Filter(self.members | other.members)

    __or__ = union

    def __str__(self) -> str:
        if self.members is None:
            return "all"
        if not self.members:
            return "empty"
        top = max(self.members)
        if self.members == frozenset(range(1, top + 1)):
            return f"p{top + 1}"
        return "{" + ",".join(str(c) for c in sorted(self.members)) + "}"


ALL = Filter.all()
EMPTY = Filter.empty()


# --------------------------------------------------------------------------- #
#                                 partitions                                  #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class SetPartition:
    """A partition of {1..n} in canonical form.

    Blocks are ascending tuples, ordered by their least element.  Use
    :meth:`from_blocks` to build one from arbitrary iterables.
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = sorted(i for b in self.blocks for i in b)
        if seen != list(range(1, self.n + 1)):
            raise ValueError(f"blocks {self.blocks} do not partition 1..{self.n}")
        if any(not b for b in self.blocks):
            raise ValueError("blocks must be nonempty")
        canon = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        if canon != self.blocks:
            raise ValueError("blocks are not in canonical order; use from_blocks")

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], n: int | None = None) -> "SetPartition":
        canon = tuple(sorted(tuple(sorted(int(i) for i in b)) for b in blocks))
        if n is None:
            n = sum(len(b) for b in canon)
        return cls(n, canon)

    @classmethod
    def from_rgs(cls, rgs: Sequence[int]) -> "SetPartition":
        """Build from a restricted-growth string (0-based block labels)."""
        blocks: dict[int, list[int]] = {}
        for pos, label in enumerate(rgs, start=1):
            blocks.setdefault(label, []).append(pos)
        return cls(len(rgs), tuple(tuple(blocks[k]) for k in sorted(blocks)))

    @classmethod
    def from_labels(cls, labels: Sequence) -> "SetPartition":
        """Partition positions by equality of arbitrary hashable labels."""
        blocks: dict = {}
        for pos, label in enumerate(labels, start=1):
            blocks.setdefault(label, []).append(pos)
        return cls.from_blocks(blocks.values(), n=len(labels))

    @classmethod
    def parse(cls, text: str) -> "SetPartition":
        """Parse ``"1,3,5|2,4"`` (braces optional)."""
        blocks = []
        for chunk in text.split("|"):
            chunk = chunk.strip().strip("{}")
            blocks.append([int(tok) for tok in chunk.split(",") if tok.strip()])
        return cls.from_blocks(blocks)

    @classmethod
    def singletons(cls, n: int) -> "SetPartition":
        return cls(n, tuple((i,) for i in range(1, n + 1)))

    def rgs(self) -> tuple[int, ...]:
        out = [0] * self.n
        for label, block in enumerate(self.blocks):
            for i in block:
                out[i - 1] = label
        return tuple(out)

    def block_index(self) -> dict[int, int]:
        return {i: label for label, block in enumerate(self.blocks) for i in block}

    def __len__(self) -> int:
        return len(self.blocks)

    def refines(self, other: "SetPartition") -> bool:
        """True when every block of ``self`` lies inside a block of ``other``."""
        if self.n != other.n:
            return False
        where = other.block_index()
        return all(len({where[i] for i in b}) == 1 for b in self.blocks)

    def is_pair_partition(self) -> bool:
        return all(len(b) == 2 for b in self.blocks)

    def __str__(self) -> str:
        return "|".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)


@dataclass(frozen=True)
class ColorFilterTuple:
    """Colors and filters attached to positions 1..n of a word."""

    colors: tuple[int, ...]
    filters: tuple[Filter, ...]

    def __post_init__(self):
        if len(self.colors) != len(self.filters):
            raise ValueError(
                f"{len(self.colors)} colors but {len(self.filters)} filters")
        if not self.colors:
            raise ValueError("a color/filter tuple needs at least one position")
        if any(int(c) != c or c < 1 for c in self.colors):
            raise ValueError("colors are positive integers")

    @classmethod
    def build(cls, colors: Iterable[int], filters: Iterable[Filter | str]) -> "ColorFilterTuple":
        fs = tuple(f if isinstance(f, Filter) else Filter.parse(f) for f in filters)
        return cls(tuple(int(c) for c in colors), fs)

    @classmethod
    def parse(cls, colors: str, filters: str) -> "ColorFilterTuple":
        """Parse ``"1,1,2"`` and ``"all,p2,{1,3}"``."""
        return cls.build((int(c) for c in colors.split(",")), _split_filters(filters))

    @classmethod
    def uniform(cls, n: int, color: int, flt: Filter) -> "ColorFilterTuple":
        return cls((color,) * n, (flt,) * n)

    def __len__(self) -> int:
        return len(self.colors)

    def blocked(self) -> list[list[bool]]:
        """``blocked[i][m]`` is True when the filter at m excludes the color at i (0-based)."""
        return [[not f.contains(c) for f in self.filters] for c in self.colors]


def _split_filters(text: str) -> list[str]:
    # commas inside braces belong to the set literal
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s for s in (tok.strip() for tok in out) if s]


def _check_lengths(R: SetPartition, cf: ColorFilterTuple) -> None:
    if R.n != len(cf):
        raise ValueError(f"partition of {R.n} points but tuple of length {len(cf)}")


# --------------------------------------------------------------------------- #
#                                 enumeration                                 #
# --------------------------------------------------------------------------- #

def enumerate_partitions(n: int, *, limit: int | None = None) -> list[SetPartition]:
    """All partitions of {1..n}, ordered lexicographically by restricted-growth string."""
    if n < 1:
        raise ValueError("n must be positive")
    _guard(n, limit)
    return [SetPartition.from_rgs(r) for r in _rgs_list(n)]


@lru_cache(maxsize=16)
def _rgs_list(n: int) -> tuple[tuple[int, ...], ...]:
    out = []
    a = [0] * n

    def rec(i: int, top: int) -> None:
        if i == n:
            out.append(tuple(a))
            return
        for label in range(top + 1):
            a[i] = label
            rec(i + 1, top + (label == top))

    if n:
        a[0] = 0
        rec(1, 1)
    return tuple(out)


def enumerate_pair_partitions(n: int, *, limit: int | None = None) -> list[SetPartition]:
    """All pair partitions of {1..n} (empty for odd n), in restricted-growth order."""
    if n < 1:
        raise ValueError("n must be positive")
    _guard(n, limit)
    if n % 2:
        return []
    out = []
    for rgs in _backend.collect([1] * n, [[False] * n for _ in range(n)],
                                relative=False, adapted_only=False, pair_only=True):
        out.append(SetPartition.from_rgs(rgs))
    return out


# --------------------------------------------------------------------------- #
#                                 adaptedness                                 #
# --------------------------------------------------------------------------- #

def is_adapted(R: SetPartition, cf: ColorFilterTuple) -> bool:
    """Monochromatic blocks, and no foreign position between two block
    elements whose filter excludes the block color."""
    _check_lengths(R, cf)
    colors, filters = cf.colors, cf.filters
    for block in R.blocks:
        color = colors[block[0] - 1]
        if any(colors[i - 1] != color for i in block):
            return False
        members = set(block)
        for m in range(block[0] + 1, block[-1]):
            if m not in members and not filters[m - 1].contains(color):
                return False
    return True


def _refine(R: SetPartition, cf: ColorFilterTuple, foreign_only: bool) -> SetPartition:
    colors, filters = cf.colors, cf.filters
    where = R.block_index()
    pieces: list[list[int]] = []
    for block in R.blocks:
        by_color: dict[int, list[int]] = {}
        for i in block:
            by_color.setdefault(colors[i - 1], []).append(i)
        for color, members in by_color.items():
            run = [members[0]]
            for prev, cur in zip(members, members[1:]):
                cut = any(
                    not filters[m - 1].contains(color)
                    and (not foreign_only or where[m] != where[cur])
                    for m in range(prev + 1, cur))
                if cut:
                    pieces.append(run)
                    run = [cur]
                else:
                    run.append(cur)
            pieces.append(run)
    return SetPartition.from_blocks(pieces, n=R.n)


def coarsest_adapted(R: SetPartition, cf: ColorFilterTuple) -> SetPartition:
    """The unique coarsest refinement of R that is adapted to ``cf``.

    Each block is split by color; each color class is then cut between
    consecutive members wherever an intermediate position's filter excludes
    the color.  The surviving runs are the blocks of the result.
    """
    _check_lengths(R, cf)
    return _refine(R, cf, foreign_only=False)


def filtered_refinement(R: SetPartition, cf: ColorFilterTuple) -> SetPartition:
    """Refinement governing how a filtered moment factorizes.

    Like :func:`coarsest_adapted`, except that only positions lying outside
    the original block of R can cut a color class.  Positions of the same
    block carry projections acting on a different tensor slot, so they never
    separate.  The two refinements agree whenever the blocks of R are
    monochromatic.
    """
    _check_lengths(R, cf)
    return _refine(R, cf, foreign_only=True)


def enumerate_adapted(cf: ColorFilterTuple, pair_only: bool = False, *,
                      limit: int | None = None) -> list[SetPartition]:
    """Adapted partitions (or pair partitions) in restricted-growth order."""
    n = len(cf)
    _guard(n, limit)
    if pair_only and n % 2:
        return []
    color_ids, blocked = _kernel_inputs(cf)
    rows = _backend.collect(color_ids, blocked, relative=False,
                            adapted_only=True, pair_only=pair_only)
    return [SetPartition.from_rgs(r) for r in rows]


def _kernel_inputs(cf: ColorFilterTuple) -> tuple[list[int], list[list[bool]]]:
    palette = {c: idx for idx, c in enumerate(sorted(set(cf.colors)))}
    return [palette[c] for c in cf.colors], cf.blocked()


def adapted_tally(cf: ColorFilterTuple, *, adapted_only: bool, pair_only: bool = False,
                  relative: bool = True, limit: int | None = None
                  ) -> dict[tuple[int, tuple[tuple[int, int], ...]], int]:
    """Histogram of partitions of {1..n} keyed by their refined block profile.

    Keys are ``(p, profile)`` where p is the number of blocks of R and
    ``profile`` is the sorted tuple of ``(color, size)`` over the blocks of
    the refinement.  ``relative`` selects :func:`filtered_refinement`
    (True) or :func:`coarsest_adapted` (False); with ``adapted_only`` the
    two coincide.
    """
    n = len(cf)
    _guard(n, limit)
    palette = sorted(set(cf.colors))
    color_ids, blocked = _kernel_inputs(cf)
    raw = _backend.tally(color_ids, blocked, relative=relative,
                         adapted_only=adapted_only, pair_only=pair_only)
    out = {}
    for (p, codes), count in raw.items():
        profile = tuple((palette[code // (n + 1)], code % (n + 1)) for code in codes)
        out[(p, profile)] = count
    return out


# --------------------------------------------------------------------------- #
#                           counting helpers                                  #
# --------------------------------------------------------------------------- #

def count_noncrossing_pairings(n: int, *, limit: int | None = None) -> int:
    """Number of non-crossing pair partitions of {1..n}, by explicit enumeration."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    _guard(n, limit if limit is not None else 2 * MAX_ENUMERATION)
    return sum(1 for _ in iter_noncrossing_pairings(n))


def iter_noncrossing_pairings(n: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Non-crossing pairings of {1..n}: 1 is matched with some j, splitting the rest."""
    def rec(lo: int, hi: int) -> Iterator[tuple[tuple[int, int], ...]]:
        if lo > hi:
            yield ()
            return
        for j in range(lo + 1, hi + 1, 2):
            for inner in rec(lo + 1, j - 1):
                for outer in rec(j + 1, hi):
                    yield ((lo, j),) + inner + outer

    if n % 2:
        return iter(())
    return rec(1, n)


def is_noncrossing(R: SetPartition) -> bool:
    for a in R.blocks:
        for b in R.blocks:
            if a is b:
                continue
            for i in a:
                for k in a:
                    if i < k and any(i < j < k for j in b) and any(j < i or j > k for j in b):
                        return False
    return True


def bell(n: int) -> int:
    """Bell numbers via the Bell triangle."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def catalan(p: int) -> int:
    from math import comb
    return comb(2 * p, p) // (p + 1)
