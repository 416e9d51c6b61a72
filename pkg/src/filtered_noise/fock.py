"""Truncated multiple symmetric Fock space with filtered ladder operators.

The one-particle space is ``d`` grid cells of width ``delta`` times ``M``
colors, so a particle lives in mode ``mu = (color - 1) * d + (cell - 1)``.
Basis vectors are orthonormal occupation states, stored as sorted tuples of
mode indices; they are ordered by particle number, then lexicographically.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from filtered_noise.partitions import ColorFilterTuple, Filter, enumerate_adapted

#: Default cap on the number of basis states.
BASIS_CAP = 50_000


class TruncationError(RuntimeError):
    """An operation would leave the truncated space."""


class BasisCapError(ValueError):
    """The requested truncation has more basis states than allowed."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x)) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class Truncation:
    d: int
    delta: Fraction
    M: int
    n_max: int
    cap: int = BASIS_CAP

    def __post_init__(self):
        object.__setattr__(self, "delta", _frac(self.delta))
        if min(self.d, self.M, self.n_max, self.cap) < 1 or self.delta <= 0:
            raise ValueError("truncation parameters must be positive")

    @property
    def modes(self) -> int:
        return self.d * self.M

    def size(self) -> int:
        D = self.modes
        return sum(math.comb(D + n - 1, n) for n in range(self.n_max + 1))


def permanent(A: np.ndarray) -> complex:
    """Permanent by Ryser's formula (fine for the small matrices used here)."""
    A = np.asarray(A)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for mask in range(1, 1 << n):
        cols = [j for j in range(n) if mask >> j & 1]
        rowsums = A[:, cols].sum(axis=1)
        total += (-1) ** len(cols) * np.prod(rowsums)
    return (-1) ** n * total


class FockSpace:
    """Occupation basis of the truncated symmetric Fock space."""

    def __init__(self, trunc: Truncation):
        if trunc.size() > trunc.cap:
            raise BasisCapError(f"basis size {trunc.size()} exceeds cap {trunc.cap}")
        self.trunc = trunc
        D = trunc.modes
        states = []
        for n in range(trunc.n_max + 1):
            states.extend(itertools.combinations_with_replacement(range(D), n))
        self.states: tuple[tuple[int, ...], ...] = tuple(states)
        self.index = {s: i for i, s in enumerate(self.states)}
        self.grade = np.array([len(s) for s in self.states])
        self._colors = tuple(frozenset(mu // trunc.d + 1 for mu in s) for s in self.states)
        self._proj_cache: dict[Filter, "FockOperator"] = {}

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def d(self) -> int:
        return self.trunc.d

    @property
    def M(self) -> int:
        return self.trunc.M

    @property
    def n_max(self) -> int:
        return self.trunc.n_max

    def mode(self, cell: int, color: int) -> int:
        """Mode index of grid cell ``cell`` (1-based) in color ``color``."""
        return (color - 1) * self.d + (cell - 1)

    def colors_of(self, i: int) -> frozenset:
        return self._colors[i]

    def sorted_colors(self, i: int) -> tuple[int, ...]:
        return tuple(mu // self.d + 1 for mu in self.states[i])

    def describe(self, i: int) -> list[tuple[int, int]]:
        """Particles of basis state ``i`` as (cell, color) pairs."""
        return [(mu % self.d + 1, mu // self.d + 1) for mu in self.states[i]]

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def basis_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[i] = 1.0
        return v

    def grade_mask(self, max_grade: int) -> np.ndarray:
        return self.grade <= max_grade

    def check_color(self, k: int) -> None:
        if not 1 <= k <= self.M:
            raise ValueError(f"color {k} outside 1..{self.M}")

    def mode_vector(self, f, k: int) -> np.ndarray:
        """Embed a grid vector ``f`` (length d) into color ``k``."""
        self.check_color(k)
        f = np.asarray(f, dtype=complex)
        if f.shape != (self.d,):
            raise ValueError(f"mode vector must have length {self.d}")
        out = np.zeros(self.trunc.modes, dtype=complex)
        out[(k - 1) * self.d:k * self.d] = f
        return out

    def symmetric_product(self, vectors: Sequence[np.ndarray]) -> np.ndarray:
        """Coordinates of the symmetrized product v_1 o ... o v_n.

        Each ``v`` is a full one-particle vector (length d*M).  The product is
        the average over permutations of the tensor product, so that
        <v_1 o ... o v_n, w_1 o ... o w_n> = perm(<v_i, w_j>) / n!.
        """
        n = len(vectors)
        if n > self.n_max:
            raise TruncationError(f"{n} particles exceed n_max={self.n_max}")
        out = np.zeros(self.dim, dtype=complex)
        if n == 0:
            out[0] = 1.0
            return out
        V = np.array(vectors, dtype=complex)  # V[j, mu]
        fact_n = math.factorial(n)
        for i in np.flatnonzero(self.grade == n):
            s = self.states[i]
            A = V[:, list(s)].T  # A[row i, col j] = v_j[mu_i]
            mult = 1
            for _, grp in itertools.groupby(s):
                mult *= math.factorial(len(list(grp)))
            out[i] = permanent(A) / math.sqrt(fact_n * mult)
        return out


def build_space(trunc: Truncation) -> FockSpace:
    return FockSpace(trunc)


@dataclass(frozen=True)
class FockOperator:
    """Sparse matrix on a fixed :class:`FockSpace`.

    ``raises`` is the largest number of particles the operator can add; it
    drives the strict truncation check in :meth:`apply`.
    """

    space: FockSpace = field(repr=False)
    matrix: sp.csr_matrix = field(repr=False)
    raises: int = 0
    description: str = ""

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        if isinstance(other, np.ndarray):
            return self.apply(other)
        return FockOperator(self.space, (self.matrix @ other.matrix).tocsr(),
                            self.raises + other.raises,
                            f"{self.description} {other.description}".strip())

    def __add__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.space, (self.matrix + other.matrix).tocsr(),
                            max(self.raises, other.raises),
                            f"({self.description} + {other.description})")

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.space, (self.matrix - other.matrix).tocsr(),
                            max(self.raises, other.raises),
                            f"({self.description} - {other.description})")

    def __rmul__(self, c) -> "FockOperator":
        return FockOperator(self.space, (complex(c) * self.matrix).tocsr(), self.raises,
                            f"{c}*{self.description}")

    def adjoint(self) -> "FockOperator":
        # the adjoint lowers where we raise; keep the bound conservative
        return FockOperator(self.space, self.matrix.conj().T.tocsr(), self.raises,
                            f"({self.description})^*")

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, vec: np.ndarray, *, strict: bool = True) -> np.ndarray:
        """Apply to a coordinate vector, refusing to push weight past n_max."""
        if strict and self.raises:
            top = self.space.grade > self.space.n_max - self.raises
            if np.any(vec[top] != 0):
                raise TruncationError(
                    f"{self.description or 'operator'} would create past n_max="
                    f"{self.space.n_max}")
        return self.matrix @ vec


def _identity_like(space: FockSpace, diag, description: str) -> FockOperator:
    return FockOperator(space, sp.diags(np.asarray(diag, dtype=complex)).tocsr(), 0,
                        description)


def projection(space: FockSpace, sigma: Filter) -> FockOperator:
    """Second-quantized color projection: keeps states whose colors all lie in sigma."""
    cached = space._proj_cache.get(sigma)
    if cached is not None:
        return cached
    diag = [1.0 if all(sigma.contains(c) for c in space.colors_of(i)) else 0.0
            for i in range(space.dim)]
    op = _identity_like(space, diag, f"P[{sigma}]")
    space._proj_cache[sigma] = op
    return op


def creation(space: FockSpace, f, k: int) -> FockOperator:
    """Boson creation of ``f`` (grid vector) in color ``k``."""
    space.check_color(k)
    f = np.asarray(f, dtype=complex)
    rows, cols, vals = [], [], []
    for i, s in enumerate(space.states):
        if len(s) >= space.n_max:
            continue
        for j in range(space.d):
            if f[j] == 0:
                continue
            mu = space.mode(j + 1, k)
            new = tuple(sorted(s + (mu,)))
            rows.append(space.index[new])
            cols.append(i)
            vals.append(f[j] * math.sqrt(s.count(mu) + 1))
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim), dtype=complex)
    return FockOperator(space, mat, 1, f"a*(k={k})")


def annihilation(space: FockSpace, f, k: int) -> FockOperator:
    """Adjoint of :func:`creation`; antilinear in ``f``."""
    op = creation(space, f, k)
    return FockOperator(space, op.matrix.conj().T.tocsr(), 0, f"a(k={k})")


def dgamma(space: FockSpace, T, k: int) -> FockOperator:
    """Differential second quantization of the grid matrix ``T`` acting in color ``k``."""
    space.check_color(k)
    T = np.asarray(T, dtype=complex)
    if T.shape != (space.d, space.d):
        raise ValueError(f"one-particle matrix must be {space.d}x{space.d}")
    if not np.any(T - np.diag(np.diag(T))):
        # diagonal: each state is an eigenvector
        diag = np.zeros(space.dim, dtype=complex)
        for i, s in enumerate(space.states):
            diag[i] = sum(T[mu % space.d, mu % space.d] for mu in s if mu // space.d + 1 == k)
        return _identity_like(space, diag, f"dG(k={k})")
    rows, cols, vals = [], [], []
    for i, s in enumerate(space.states):
        for mu in sorted(set(s)):
            if mu // space.d + 1 != k:
                continue
            jj = mu % space.d
            rest = list(s)
            rest.remove(mu)
            lower = math.sqrt(s.count(mu))
            for ii in range(space.d):
                if T[ii, jj] == 0:
                    continue
                nu = space.mode(ii + 1, k)
                new = tuple(sorted(rest + [nu]))
                rows.append(space.index[new])
                cols.append(i)
                vals.append(T[ii, jj] * lower * math.sqrt(rest.count(nu) + 1))
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim), dtype=complex)
    return FockOperator(space, mat, 0, f"dG(k={k})")


def filtered_creation(space: FockSpace, f, k: int, sigma: Filter) -> FockOperator:
    """Project onto colors in sigma, then create."""
    return creation(space, f, k) @ projection(space, sigma)


def filtered_annihilation(space: FockSpace, f, k: int, sigma: Filter) -> FockOperator:
    """Annihilate, then project onto colors in sigma."""
    return projection(space, sigma) @ annihilation(space, f, k)


def filtered_number(space: FockSpace, k: int, sigma: Filter, T=None) -> FockOperator:
    """Second quantization of ``T`` in color k after projecting onto sigma + {k}."""
    if T is None:
        T = np.eye(space.d)
    return dgamma(space, T, k) @ projection(space, sigma | Filter.of([k]))


# --------------------------------------------------------------------------- #
#                                processes                                    #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Create:
    f: tuple
    k: int
    sigma: Filter


@dataclass(frozen=True)
class Annihilate:
    f: tuple
    k: int
    sigma: Filter


@dataclass(frozen=True)
class Number:
    k: int
    sigma: Filter
    T: tuple | None = None


@dataclass(frozen=True)
class Time:
    sigma: Filter
    t: Fraction


@dataclass(frozen=True)
class Lambda:
    k: int
    sigma: Filter
    t: Fraction


@dataclass(frozen=True)
class Projection:
    sigma: Filter


OpSpec = Union[Create, Annihilate, Number, Time, Lambda, Projection]


def _cells(space: FockSpace, t) -> int:
    t = _frac(t)
    cells = t / space.trunc.delta
    if cells.denominator != 1 or not 0 <= cells <= space.d:
        raise ValueError(f"t={t} is not a grid point in [0, {space.d * space.trunc.delta}]")
    return int(cells)


def chi(space: FockSpace, t) -> np.ndarray:
    """Grid vector of the indicator of [0, t]; its squared norm is t."""
    c = _cells(space, t)
    out = np.zeros(space.d, dtype=complex)
    out[:c] = math.sqrt(space.trunc.delta)
    return out


def indicator(space: FockSpace, t) -> np.ndarray:
    """Multiplication by the indicator of [0, t] as a diagonal grid matrix."""
    c = _cells(space, t)
    return np.diag([1.0] * c + [0.0] * (space.d - c))


def process(space: FockSpace, item: OpSpec) -> FockOperator:
    """Realize one operator specification on the space."""
    if isinstance(item, Create):
        return filtered_creation(space, item.f, item.k, item.sigma)
    if isinstance(item, Annihilate):
        return filtered_annihilation(space, item.f, item.k, item.sigma)
    if isinstance(item, Number):
        T = None if item.T is None else np.asarray(item.T)
        return filtered_number(space, item.k, item.sigma, T)
    if isinstance(item, Time):
        P = projection(space, item.sigma)
        return float(_frac(item.t)) * P
    if isinstance(item, Projection):
        return projection(space, item.sigma)
    if isinstance(item, Lambda):
        x = chi(space, item.t)
        out = (filtered_annihilation(space, x, item.k, item.sigma)
               + filtered_creation(space, x, item.k, item.sigma)
               + filtered_number(space, item.k, item.sigma, indicator(space, item.t))
               + process(space, Time(item.sigma, item.t)))
        return FockOperator(space, out.matrix, 1, f"Lambda(k={item.k},{item.sigma},t={item.t})")
    raise TypeError(f"unknown operator item {item!r}")


def _raises(item) -> int:
    if isinstance(item, FockOperator):
        return item.raises
    return 1 if isinstance(item, (Create, Lambda)) else 0


def vacuum_expectation(space: FockSpace, word: Sequence) -> complex:
    """<Omega, X_1 X_2 ... X_n Omega> for operator specs or prebuilt operators.

    The word is applied right to left.  A word that could create more
    particles than the truncation holds is rejected up front.
    """
    raised = sum(_raises(x) for x in word)
    if raised > space.n_max:
        raise TruncationError(
            f"word creates up to {raised} particles but n_max={space.n_max}")
    vec = space.vacuum()
    for x in reversed(word):
        op = x if isinstance(x, FockOperator) else process(space, x)
        vec = op.apply(vec)
    return complex(vec[0])


# --------------------------------------------------------------------------- #
#                               verification                                  #
# --------------------------------------------------------------------------- #

def _restricted_residual(space: FockSpace, D: sp.spmatrix, mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    block = D.tocsr()[idx][:, idx]
    return float(abs(block).max()) if block.nnz else 0.0


def commutation_operators(space: FockSpace, sigma: Filter, tau: Filter, k: int, l: int, f, g):
    """Left- and right-hand sides of the filtered commutation relation."""
    a = filtered_annihilation(space, f, k, sigma)
    c = filtered_creation(space, g, l, tau)
    lhs = (a @ c).matrix
    if sigma.contains(l):
        lhs = lhs - (c @ a @ projection(space, tau)).matrix
    rhs = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    if k == l:
        inner = complex(np.vdot(np.asarray(f, dtype=complex), np.asarray(g, dtype=complex)))
        rhs = inner * projection(space, sigma & tau).matrix
    return lhs, rhs


def verify_commutation(space: FockSpace, sigma: Filter, tau: Filter, k: int, l: int,
                     f, g) -> float:
    """Max-entry residual of the filtered commutation relation on grades < n_max."""
    lhs, rhs = commutation_operators(space, sigma, tau, k, l, f, g)
    return _restricted_residual(space, lhs - rhs, space.grade_mask(space.n_max - 1))


def ccr_residual(space: FockSpace, f, g, k: int) -> float:
    """Residual of [a(f), a*(g)] = <f, g> on grades < n_max."""
    a, c = annihilation(space, f, k), creation(space, g, k)
    comm = (a @ c).matrix - (c @ a).matrix
    inner = complex(np.vdot(np.asarray(f, dtype=complex), np.asarray(g, dtype=complex)))
    D = comm - inner * sp.identity(space.dim, dtype=complex, format="csr")
    return _restricted_residual(space, D, space.grade_mask(space.n_max - 1))


def explicit_action(space: FockSpace, kind: str, vectors: Sequence[np.ndarray], *,
                    f=None, k: int, sigma: Filter, number_filter: Filter | None = None
                    ) -> np.ndarray:
    """Action of a filtered operator on v_1 o ... o v_n by the product formulas.

    ``kind`` is ``"create"``, ``"annihilate"`` or ``"number"``.  Each v_i is
    a full one-particle vector.  The number formula keeps the untouched
    factors projected onto ``number_filter`` (default: sigma plus {k},
    which is what composing with the projection produces).
    """
    d = space.d

    def proj(v, flt):
        out = np.array(v, dtype=complex)
        for c in range(1, space.M + 1):
            if not flt.contains(c):
                out[(c - 1) * d:c * d] = 0
        return out

    def comp(v, c):
        out = np.zeros_like(v, dtype=complex)
        out[(c - 1) * d:c * d] = v[(c - 1) * d:c * d]
        return out

    n = len(vectors)
    if kind == "create":
        fk = space.mode_vector(f, k)
        return math.sqrt(n + 1) * space.symmetric_product(
            [fk] + [proj(v, sigma) for v in vectors])
    if kind == "annihilate":
        fk = space.mode_vector(f, k)
        out = np.zeros(space.dim, dtype=complex)
        for j in range(n):
            rest = [proj(v, sigma) for i, v in enumerate(vectors) if i != j]
            out += np.vdot(fk, vectors[j]) * space.symmetric_product(rest)
        return out / math.sqrt(n) if n else out
    if kind == "number":
        keep = sigma | Filter.of([k]) if number_filter is None else number_filter
        out = np.zeros(space.dim, dtype=complex)
        for j in range(n):
            factors = [comp(v, k) if i == j else proj(v, keep) for i, v in enumerate(vectors)]
            out += space.symmetric_product(factors)
        return out
    raise ValueError(f"unknown action kind {kind!r}")


def verify_pairing_formula(space: FockSpace, legs, vectors: dict) -> tuple[complex, complex, float]:
    """Vacuum expectation of a filtered ladder word against the pairing sum.

    ``legs`` are :class:`filtered_noise.moments.Leg` objects whose ``label``
    keys into ``vectors`` (grid vectors of length d).
    """
    from filtered_noise.moments import pairing_expectation

    word = []
    for leg in legs:
        v = tuple(np.asarray(vectors[leg.label], dtype=complex))
        word.append(Create(v, leg.color, leg.filter) if leg.star
                    else Annihilate(v, leg.color, leg.filter))
    fock_value = vacuum_expectation(space, word)
    gram = {(a, b): complex(np.vdot(vectors[a], vectors[b]))
            for a in vectors for b in vectors}
    comb = pairing_expectation(legs, gram)
    return fock_value, comb, abs(fock_value - comb)


def verify_noise_moments(space: FockSpace, cf: ColorFilterTuple, t) -> tuple[complex, Fraction, float]:
    """Vacuum expectation of a product of Lambda processes against sum_R t^{b(R)}."""
    t = _frac(t)
    word = [Lambda(k, s, t) for k, s in zip(cf.colors, cf.filters)]
    fock_value = vacuum_expectation(space, word)
    comb = Fraction(0)
    for R in enumerate_adapted(cf):
        comb += t ** len(R.blocks)
    return fock_value, comb, abs(fock_value - float(comb))
