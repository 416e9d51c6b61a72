import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from filtered_noise.fock import Truncation, TruncationError, build_space
from filtered_noise.mfree import (
    MParameter,
    apply_ladder_word,
    d_basis,
    free_fock_oracle,
    in_d_basis,
    mfree_annihilation,
    mfree_creation,
    mfree_number,
    number_eigenvalue,
    semicircle_moments,
    symmetric_split_factor,
    verify_cuntz,
    verify_decomposition,
    verify_resolution,
)
from filtered_noise.moments import mfree_sample_moment
from filtered_noise.partitions import catalan


@pytest.fixture(scope="module")
def space():
    return build_space(Truncation(2, 1, 5, 4))


@pytest.fixture
def nrng():
    return np.random.default_rng(7)


def cvec(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def state(space, *pairs):
    """Basis vector for (site, color) pairs."""
    modes = tuple(sorted(space.mode(s, c) for s, c in pairs))
    return space.basis_vector(space.index[modes])


class TestMParameter:

    def test_parse(self):
        assert MParameter.parse("inf").infinite
        assert MParameter.parse("3").value == 3
        assert str(MParameter.parse(None)) == "inf"
        with pytest.raises(ValueError):
            MParameter(0)

    def test_realize(self, space):
        assert MParameter(None).realize(space) == 4
        assert MParameter(5).realize(space) == 5
        with pytest.raises(TruncationError):
            MParameter(6).realize(space)
        with pytest.raises(TruncationError):
            MParameter(None).realize(build_space(Truncation(1, 1, 1, 2)))


class TestLadders:

    def test_creation_on_vacuum(self, space):
        f = np.array([0.6, 0.8])
        out = mfree_creation(space, 3, f).apply(space.vacuum())
        want = 0.6 * state(space, (1, 1)) + 0.8 * state(space, (2, 1))
        assert np.allclose(out, want)

    def test_annihilation(self, space, nrng):
        f, f1 = cvec(nrng, 2), cvec(nrng, 2)
        one = mfree_creation(space, 3, f1).apply(space.vacuum())
        out = mfree_annihilation(space, 3, f).apply(one)
        assert np.allclose(out, np.vdot(f, f1) * space.vacuum())
        # two particles both of color one: the color-one slot is occupied
        v = state(space, (1, 1), (2, 1))
        assert not mfree_annihilation(space, 3, [1, 0]).apply(v).any()

    @pytest.mark.parametrize("m", [1, 2, 4, "inf"])
    def test_adjoint(self, space, nrng, m):
        f = cvec(nrng, 2)
        c = mfree_creation(space, m, f).toarray()
        a = mfree_annihilation(space, m, f).toarray()
        assert np.abs(c.conj().T - a).max() < 1e-14

    def test_creation_is_partial_isometry(self, space):
        f = np.array([1.0, 0.0])
        c = mfree_creation(space, 3, f).toarray()
        low = np.flatnonzero(space.grade < space.n_max)
        norms = np.linalg.norm(c[:, low], axis=0)
        assert set(np.round(norms, 12)) <= {0.0, 1.0}


class TestNumber:

    @pytest.mark.parametrize("colors,m,value", [
        ((), 3, 0),
        ((1,), 3, 1),
        ((1, 2, 3), 3, 1),
        ((1, 2, 3, 3), 3, 2),
        ((1, 2, 3, 3), 2, 0),
        ((1, 3), 3, 0),
        ((2,), 3, 0),
        ((1, 1, 2, 2), 4, 2),
    ])
    def test_eigenvalue_examples(self, colors, m, value):
        assert number_eigenvalue(colors, m) == value

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_diagonal_matches_composition(self, space, m):
        N = mfree_number(space, m).toarray()
        assert np.abs(N - np.diag(np.diag(N))).max() < 1e-14
        want = [number_eigenvalue(space.sorted_colors(i), m) for i in range(space.dim)]
        assert np.allclose(np.diag(N).real, want)


class TestCuntzAndResolution:

    @pytest.mark.parametrize("m", [1, 2, 3, "inf"])
    def test_cuntz(self, space, nrng, m):
        assert verify_cuntz(space, m, cvec(nrng, 2), cvec(nrng, 2)) < 1e-12

    @pytest.mark.parametrize("m", [1, 2, 3, 4, "inf"])
    def test_resolution(self, space, m):
        assert verify_resolution(space, m) < 1e-12

    def test_literal_reading_fails(self, space):
        assert verify_resolution(space, 2, reading="literal") > 0.5
        with pytest.raises(ValueError):
            verify_resolution(space, 2, reading="other")

    def test_d_basis_examples(self, space):
        assert in_d_basis(())
        assert in_d_basis((1, 1)) and in_d_basis((1, 3)) and in_d_basis((2,))
        assert not in_d_basis((1,)) and not in_d_basis((1, 2)) and not in_d_basis((1, 1, 2))
        idx = d_basis(space, 2)
        assert 0 in idx
        assert all(max(space.colors_of(i), default=0) <= 2 for i in idx)

    def test_kernel_of_annihilators(self, space):
        # every D-state is killed by l(e_s) for infinite m below the realized cutoff
        for i in d_basis(space):
            if max(space.colors_of(i), default=0) > space.M - 2:
                continue
            for s in range(2):
                e = np.eye(2)[s]
                assert not mfree_annihilation(space, "inf", e).apply(space.basis_vector(i)).any()


class TestFreeOracle:

    def test_catalan(self):
        f = np.array([1.0])
        for p in range(1, 5):
            count = 0

            for kinds in itertools.product(["create", "annihilate"], repeat=2 * p):
                count += free_fock_oracle([(k, f) for k in kinds]).real
            assert count == catalan(p)

    def test_leading_creation_vanishes(self):
        f = np.array([1.0, 2.0])
        assert free_fock_oracle([("create", f), ("annihilate", f)]) == 0
        assert free_fock_oracle([("annihilate", f), ("create", f)]) == 5
        with pytest.raises(ValueError):
            free_fock_oracle([("other", f)])
        with pytest.raises(TruncationError):
            free_fock_oracle([("create", f)] * 3, max_length=2)

    def test_order_matters(self):
        f, g = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        word = [("annihilate", f), ("annihilate", g), ("create", f), ("create", g)]
        assert free_fock_oracle(word) == 0
        word = [("annihilate", f), ("annihilate", g), ("create", g), ("create", f)]
        assert free_fock_oracle(word) == 1

    def test_ladder_word_matches_oracle(self, space, nrng):
        f, g = cvec(nrng, 2), cvec(nrng, 2)
        word = [("annihilate", f), ("annihilate", g), ("create", g), ("create", f)]
        out = apply_ladder_word(space, "inf", word, space.vacuum())
        assert out[0] == pytest.approx(free_fock_oracle(word))


class TestDecomposition:

    def test_symmetric_split_factor(self, space):
        D = space.trunc.modes
        e = np.eye(D)
        exact, ratio = symmetric_split_factor(space, [e[0]], [e[0]], [e[5]], [e[5]])
        assert exact == F(1, 2) and ratio == pytest.approx(0.5)
        exact, ratio = symmetric_split_factor(space, [e[0]] * 2, [e[0]] * 2, [e[5]], [e[5]])
        assert exact == F(1, 3) and ratio == pytest.approx(1 / 3)

    def test_report(self):
        s = build_space(Truncation(2, 1, 6, 5))
        sectors = [0] + [i for i in d_basis(s) if s.grade[i] == 1][:2]
        rep = verify_decomposition(s, sectors, words=15, seed=1, factor_cases=5)
        assert rep.passed() and rep.m_realized == 5 and rep.nonzero_expectations > 0

    def test_rejects_non_d_state(self, space):
        i = space.index[(space.mode(1, 1),)]
        with pytest.raises(ValueError):
            verify_decomposition(space, [i], words=1)


class TestSemicircle:

    def test_free_case_is_catalan(self):
        for p in range(0, 5):
            assert semicircle_moments("inf", p) == pytest.approx(catalan(p))

    @pytest.mark.parametrize("m", [1, 2, 3])
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_matches_combinatorial(self, m, p):
        assert semicircle_moments(m, p) == pytest.approx(float(mfree_sample_moment(m, 2 * p)))

    def test_bernoulli_for_m1(self):
        assert [semicircle_moments(1, p) for p in range(1, 5)] == pytest.approx([1, 1, 1, 1])

    @given(st.integers(min_value=1, max_value=4))
    def test_monotone_in_m(self, p):
        vals = [semicircle_moments(m, p) for m in (1, 2, 3)]
        assert vals == sorted(vals)
        assert vals[-1] <= catalan(p) + 1e-9
