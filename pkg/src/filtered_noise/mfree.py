"""Extended m-free ladder operators and the free Fock space picture.

l^{(m)*}(f) creates f in color K+1 on states whose top color is K (0 for the
vacuum) provided K+1 <= m; l^{(m)}(f) is its adjoint.  The infinite case is
realized on a finite truncation as m = M - 1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from filtered_noise.fock import (
    FockOperator,
    FockSpace,
    Truncation,
    TruncationError,
    _restricted_residual,
    build_space,
    creation,
    filtered_number,
    projection,
)
from filtered_noise.partitions import Filter


@dataclass(frozen=True)
class MParameter:
    """A positive integer, or ``None`` for infinity."""

    value: int | None

    def __post_init__(self):
        if self.value is not None and self.value < 1:
            raise ValueError("m must be a positive integer or infinity")

    @classmethod
    def parse(cls, text) -> "MParameter":
        if isinstance(text, MParameter):
            return text
        if text is None or str(text).strip().lower() in ("inf", "infinity", "oo"):
            return cls(None)
        return cls(int(text))

    @property
    def infinite(self) -> bool:
        return self.value is None

    def realize(self, space: FockSpace) -> int:
        """Finite value used on ``space``; infinity becomes M - 1."""
        if self.value is None:
            if space.M < 2:
                raise TruncationError("realizing m=infinity needs at least two colors")
            return space.M - 1
        if self.value > space.M:
            raise TruncationError(f"m={self.value} exceeds the {space.M} available colors")
        return self.value

    def __str__(self) -> str:
        return "inf" if self.value is None else str(self.value)


def _telescoped(space: FockSpace, m: int, term) -> FockOperator:
    """Sum over k = 1..m of term(k, Prefix(k)) - term(k, Prefix(k-1)), no k=1 subtrahend."""
    total = None
    for k in range(1, m + 1):
        part = term(k, Filter.prefix(k))
        if k >= 2:
            part = part - term(k, Filter.prefix(k - 1))
        total = part if total is None else total + part
    return total


def mfree_creation(space: FockSpace, m, f) -> FockOperator:
    m = MParameter.parse(m)
    mm = m.realize(space)
    op = _telescoped(space, mm, lambda k, flt: creation(space, f, k) @ projection(space, flt))
    return FockOperator(space, op.matrix, 1, f"l*(m={m})")


def mfree_annihilation(space: FockSpace, m, f) -> FockOperator:
    op = mfree_creation(space, m, f)
    return FockOperator(space, op.matrix.conj().T.tocsr(), 0, f"l(m={MParameter.parse(m)})")


def mfree_number(space: FockSpace, m) -> FockOperator:
    m = MParameter.parse(m)
    mm = m.realize(space)
    # filtered_number already adds k to the filter
    op = _telescoped(space, mm, lambda k, flt: filtered_number(space, k, flt))
    return FockOperator(space, op.matrix, 0, f"l°(m={m})")


def number_eigenvalue(colors: Sequence[int], m: int) -> int:
    """Eigenvalue of the m-free number operator on a basis state with these colors.

    N_K when the top color K is at most m and the next lower distinct color
    (0 if there is none) is K - 1; zero otherwise.
    """
    if not colors:
        return 0
    K = max(colors)
    below = max((c for c in colors if c < K), default=0)
    return colors.count(K) if K <= m and below == K - 1 else 0


def _top_colors(colors: Sequence[int]) -> tuple[int, int]:
    """(k_n, k_{n-1}) for sorted colors, with zeros standing in for missing entries."""
    ks = sorted(colors)
    return (ks[-1] if ks else 0, ks[-2] if len(ks) > 1 else 0)


def in_d_basis(colors: Sequence[int]) -> bool:
    """Whether a basis state belongs to the kernel family D (the vacuum does)."""
    if not colors:
        return True
    kn, kprev = _top_colors(colors)
    return kn != kprev + 1


def d_basis(space: FockSpace, m=None) -> list[int]:
    """Indices of D-states; with ``m`` given, only those with all colors <= m."""
    mm = None if m is None or MParameter.parse(m).infinite else MParameter.parse(m).value
    out = []
    for i in range(space.dim):
        cols = space.sorted_colors(i)
        if in_d_basis(cols) and (mm is None or all(c <= mm for c in cols)):
            out.append(i)
    return out


def verify_cuntz(space: FockSpace, m, f, g) -> float:
    """Residual of l(g) l*(f) = <g, f> P on grades below n_max.

    For finite m, P projects onto colors 1..m-1.  For infinite m, P is the
    identity and the check is restricted to colors <= M - 2, where the
    realized operators agree with the infinite ones.
    """
    m = MParameter.parse(m)
    mm = m.realize(space)
    lhs = (mfree_annihilation(space, m, g) @ mfree_creation(space, m, f)).matrix
    inner = complex(np.vdot(np.asarray(g, dtype=complex), np.asarray(f, dtype=complex)))
    mask = space.grade_mask(space.n_max - 1)
    if m.infinite:
        P = sp.identity(space.dim, dtype=complex, format="csr")
        mask = mask & np.array([max(space.colors_of(i), default=0) <= space.M - 2
                                for i in range(space.dim)])
    else:
        P = projection(space, Filter.prefix(mm)).matrix
    return _restricted_residual(space, lhs - inner * P, mask)


def resolution_projection(space: FockSpace, m, reading: str = "orthocomplement") -> np.ndarray:
    """Diagonal of the projection removed from the identity in the resolution.

    ``"orthocomplement"``: span of D-states with colors <= m together with
    every state carrying some color > m.  ``"literal"``: D-states with
    colors <= m together with states whose colors are all > m.
    """
    mm = MParameter.parse(m).realize(space)
    keep = np.zeros(space.dim)
    dset = set(d_basis(space, mm))
    for i in range(space.dim):
        cols = space.colors_of(i)
        if reading == "orthocomplement":
            outside = any(c > mm for c in cols)
        elif reading == "literal":
            outside = all(c > mm for c in cols)
        else:
            raise ValueError(f"unknown reading {reading!r}")
        keep[i] = 1.0 if (i in dset or outside) else 0.0
    return keep


def verify_resolution(space: FockSpace, m, reading: str = "orthocomplement") -> float:
    """Residual of sum_s l*(d_s) l(d_s) = I - P over the grid basis d_s."""
    total = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for s in range(space.d):
        e = np.zeros(space.d)
        e[s] = 1.0
        total = total + (mfree_creation(space, m, e) @ mfree_annihilation(space, m, e)).matrix
    target = sp.diags(1.0 - resolution_projection(space, m, reading))
    return _restricted_residual(space, total - target, np.ones(space.dim, dtype=bool))


# --------------------------------------------------------------------------- #
#                         free Fock space oracle                              #
# --------------------------------------------------------------------------- #

def free_fock_oracle(word: Sequence[tuple[str, np.ndarray]], *, max_length: int = 12) -> complex:
    """<omega, w omega> on the full Fock space over C^d.

    ``word`` is a sequence of ``("create", f)`` / ``("annihilate", f)``,
    applied right to left.  Tensors are dicts from index tuples to
    coefficients; creation prepends a factor and annihilation pairs off
    the first one.
    """
    state: dict[tuple, complex] = {(): 1.0 + 0j}
    for kind, f in reversed(list(word)):
        f = np.asarray(f, dtype=complex)
        new: dict[tuple, complex] = {}
        if kind == "create":
            for key, c in state.items():
                if len(key) >= max_length:
                    raise TruncationError("free Fock oracle tensor length exceeded")
                for i, fi in enumerate(f):
                    if fi != 0:
                        new[(i,) + key] = new.get((i,) + key, 0) + fi * c
        elif kind == "annihilate":
            for key, c in state.items():
                if key:
                    new[key[1:]] = new.get(key[1:], 0) + np.conj(f[key[0]]) * c
        else:
            raise ValueError(f"unknown ladder kind {kind!r}")
        state = new
    return complex(state.get((), 0))


def apply_ladder_word(space: FockSpace, m, word, vec: np.ndarray,
                      cache: dict | None = None) -> np.ndarray:
    """Apply a create/annihilate word of m-free operators to ``vec``, right to left.

    ``cache`` (optional) memoizes operators by kind and vector bytes.
    """
    cache = {} if cache is None else cache
    for kind, f in reversed(list(word)):
        key = (kind, np.asarray(f, dtype=complex).tobytes())
        op = cache.get(key)
        if op is None:
            if kind == "create":
                op = mfree_creation(space, m, f)
            elif kind == "annihilate":
                op = mfree_annihilation(space, m, f)
            else:
                raise ValueError(f"unknown ladder kind {kind!r}")
            cache[key] = op
        vec = op.apply(vec)
    return vec


def random_ladder_word(rng: np.random.Generator, d: int, length: int,
                       vectors: Sequence[np.ndarray]) -> list[tuple[str, np.ndarray]]:
    """Word with equally many creators and annihilators (others vanish on the vacuum)."""
    kinds = ["create"] * (length // 2) + ["annihilate"] * (length - length // 2)
    rng.shuffle(kinds)
    return [(k, vectors[int(rng.integers(len(vectors)))]) for k in kinds]


def _height(word) -> int:
    """Largest number of net creations reached while applying the word right to left."""
    h = top = 0
    for kind, _ in reversed(list(word)):
        h += 1 if kind == "create" else -1
        top = max(top, h)
    return top


def symmetric_split_factor(space: FockSpace, xs, zs, us, vs) -> tuple[Fraction, complex]:
    """Ratio <x.u, z.v> / (<x, z><u, v>) for symmetric products, and the exact factor."""
    r, n = len(xs), len(us)
    lhs = np.vdot(space.symmetric_product(list(xs) + list(us)),
                  space.symmetric_product(list(zs) + list(vs)))
    xz = np.vdot(space.symmetric_product(list(xs)), space.symmetric_product(list(zs)))
    uv = np.vdot(space.symmetric_product(list(us)), space.symmetric_product(list(vs)))
    exact = Fraction(math.factorial(r) * math.factorial(n), math.factorial(r + n))
    return exact, complex(lhs / (xz * uv))


@dataclass
class DecompositionReport:
    seed: int
    m_realized: int
    sectors: list
    orthogonality: float
    oracle: float
    factor: float
    words_per_sector: int
    nonzero_expectations: int = 0

    def passed(self, tol_orth=1e-12, tol_oracle=1e-9, tol_factor=1e-12) -> bool:
        return (self.orthogonality <= tol_orth and self.oracle <= tol_oracle
                and self.factor <= tol_factor)


def verify_decomposition(space: FockSpace, sectors: Sequence[int], *, words: int = 50,
                         max_length: int = 4, seed: int = 0, factor_cases: int = 20
                         ) -> DecompositionReport:
    """Check the free Fock decomposition on a list of D-state indices.

    (i) words applied to distinct sectors stay orthogonal, (ii) diagonal
    expectations match :func:`free_fock_oracle`, (iii) the symmetric
    product scalar-product factor r!n!/(r+n)! is reproduced.  The m-free
    operators are taken with m infinite (realized as M - 1); words are
    drawn so they never reach color M or particle number n_max + 1.
    """
    rng = np.random.default_rng(seed)
    m = MParameter(None)
    mm = m.realize(space)
    pool = [rng.normal(size=space.d) + 1j * rng.normal(size=space.d) for _ in range(3)]
    orth = oracle = 0.0
    nonzero = 0
    cache: dict = {}
    images: dict[int, list[np.ndarray]] = {}
    for x in sectors:
        cols = space.sorted_colors(x)
        if not in_d_basis(cols):
            raise ValueError(f"basis state {x} is not a D-state")
        room = min(space.n_max - len(cols), mm - (max(cols) if cols else 0))
        if room < 1:
            raise TruncationError(f"sector {x} leaves no room for creations")
        vec_x = space.basis_vector(x)
        images[x] = []
        drawn = 0
        while drawn < words:
            length = 2 * int(rng.integers(1, max_length // 2 + 1))
            w = random_ladder_word(rng, space.d, length, pool)
            if _height(w) > room:
                continue
            drawn += 1
            out = apply_ladder_word(space, m, w, vec_x, cache)
            ref = free_fock_oracle(w)
            nonzero += abs(ref) > 1e-12
            oracle = max(oracle, abs(np.vdot(vec_x, out) - ref))
            images[x].append(out)
    keys = list(images)
    for a, b in itertools.combinations(keys, 2):
        for u in images[a]:
            for v in images[b]:
                orth = max(orth, abs(np.vdot(u, v)))
    factor = 0.0
    for _ in range(factor_cases):
        factor = max(factor, _sample_factor(space, rng))
    return DecompositionReport(seed, mm, keys, float(orth), float(oracle), float(factor),
                               words, nonzero)


def _sample_factor(space: FockSpace, rng: np.random.Generator) -> float:
    """Relative error of one random instance of the r!n!/(r+n)! factor."""
    D = space.trunc.modes
    split = int(rng.integers(1, D))
    total = int(rng.integers(2, space.n_max + 1))
    r = int(rng.integers(1, total))
    n = total - r

    def vec(lo, hi):
        v = np.zeros(D, dtype=complex)
        v[lo:hi] = rng.normal(size=hi - lo) + 1j * rng.normal(size=hi - lo)
        return v

    xs = [vec(0, split) for _ in range(r)]
    zs = [vec(0, split) for _ in range(r)]
    us = [vec(split, D) for _ in range(n)]
    vs = [vec(split, D) for _ in range(n)]
    exact, ratio = symmetric_split_factor(space, xs, zs, us, vs)
    return abs(ratio - float(exact)) / float(exact)


def semicircle_moments(m, p: int, *, space: FockSpace | None = None) -> float:
    """<Omega, (l(f) + l*(f))^{2p} Omega> for a unit vector f.

    Computed as the squared norm of (l + l*)^p Omega, which needs only
    p particles and p + 1 colors.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    if space is None:
        space = build_space(Truncation(1, 1, max(p + 1, 2), max(p, 1)))
    m = MParameter.parse(m)
    if not m.infinite and m.value > space.M:
        m = MParameter(space.M)
    f = np.zeros(space.d)
    f[0] = 1.0
    X = mfree_creation(space, m, f) + mfree_annihilation(space, m, f)
    vec = space.vacuum()
    for _ in range(p):
        vec = X.apply(vec)
    return float(np.vdot(vec, vec).real)
