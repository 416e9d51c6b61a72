import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from filtered_noise.moments import (
    Leg,
    MissingLabelError,
    MomentModel,
    MomentOrderError,
    MomentSequence,
    WorkLimitError,
    Word,
    clt_limit,
    clt_normalized,
    closed_form_oracles,
    convolution_power,
    convolution_power_bruteforce,
    falling_factorial,
    filtered_word_moment,
    filtered_word_moment_recursive,
    mfree_sample_moment,
    mfree_terms,
    pairing_expectation,
    poisson_limit,
    white_noise_moment,
)
from filtered_noise.oracles import word_moment_model
from filtered_noise.partitions import (
    ColorFilterTuple,
    Filter,
    bell,
    catalan,
    count_noncrossing_pairings,
    double_factorial,
)

from conftest import color_filter_tuples, filters

ALL, EMPTY = Filter.all(), Filter.empty()
rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def uniform(n, flt, color=1):
    return ColorFilterTuple.uniform(n, color, flt)


@st.composite
def words_and_models(draw, max_len=8):
    n = draw(st.integers(1, max_len))
    labels = draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
    colors = draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
    flts = draw(st.lists(filters(3), min_size=n, max_size=n))
    model = MomentModel({l: MomentSequence.from_moments(
        draw(st.lists(rationals, min_size=n, max_size=n))) for l in set(labels)})
    return Word.build(labels, colors, flts), model


class TestMomentData:

    def test_sequence_basics(self):
        s = MomentSequence.parse("0, 1, 0, 3")
        assert s[0] == 1 and s[4] == 3 and s.max_order == 4
        assert s.to_strings() == ["0", "1", "0", "3"]
        with pytest.raises(MomentOrderError):
            s[5]
        with pytest.raises(ValueError):
            MomentSequence((F(2), F(1)))
        with pytest.raises(TypeError):
            MomentSequence.from_moments([0.5])

    def test_named_sequences(self):
        assert MomentSequence.rademacher(4).values == (1, 0, 1, 0, 1)
        assert MomentSequence.gaussian(6).values == (1, 0, 1, 0, 3, 0, 15)
        assert MomentSequence.constant(F(1, 3), 2).values == (1, F(1, 3), F(1, 3))

    def test_model(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"a": ["1/2", "3"], "b": ["0", "1"]}))
        model = MomentModel.load(path)
        assert model["a"][1] == F(1, 2)
        with pytest.raises(MissingLabelError):
            model["c"]

    def test_word_validation(self):
        with pytest.raises(ValueError):
            Word(())
        with pytest.raises(ValueError):
            Word.build([1, 2], [1], ["all", "all"])


class TestWordMoments:

    s1 = MomentSequence.from_moments([F(2, 3), F(5, 7), F(1, 11), F(3)])
    s2 = MomentSequence.from_moments([F(-1, 2), F(4, 9), F(2), F(1, 5)])
    model = MomentModel({1: s1, 2: s2})

    def test_example_i(self):
        w = Word.build([1, 2, 1, 2], [1] * 4, ["p1", "p2", "p2", "p1"])
        want = self.s1[2] * self.s2[2]
        assert filtered_word_moment(w, self.model) == want
        assert filtered_word_moment_recursive(w, self.model) == want

    def test_example_ii(self):
        w = Word.build([1, 2, 1, 2], [1] * 4, ["p1", "p2", "p1", "p1"])
        want = self.s1[2] * self.s2[1] ** 2
        assert filtered_word_moment(w, self.model) == want
        assert filtered_word_moment_recursive(w, self.model) == want

    def test_single_leg(self):
        w = Word.build([2], [3], ["empty"])
        assert filtered_word_moment(w, self.model) == self.s2[1]
        assert filtered_word_moment_recursive(w, self.model) == self.s2[1]

    def test_singleton_first_leg_factorizes(self):
        w = Word.build([1, 2, 2], [1, 1, 1], ["all", "all", "all"])
        assert filtered_word_moment_recursive(w, self.model) == self.s1[1] * self.s2[2]

    def test_adjacent_legs_merge_with_intersected_filters(self):
        # the middle pair merges into one power carrying the intersection
        w = Word.build([1, 2, 2, 1], [1, 2, 2, 1], ["all", "{1,2}", "{1,3}", "all"])
        want = self.s1[2] * self.s2[2]
        assert filtered_word_moment_recursive(w, self.model) == want
        assert filtered_word_moment(w, self.model) == want
        w = Word.build([1, 2, 2, 1], [1, 2, 2, 1], ["all", "{1,2}", "{2}", "all"])
        want = self.s1[1] ** 2 * self.s2[2]
        assert filtered_word_moment_recursive(w, self.model) == want
        assert filtered_word_moment(w, self.model) == want

    def test_mixed_color_block(self):
        # a same-label position of another color does not cut the block
        w = Word.build([1, 1, 1], [1, 2, 1], ["all", "empty", "all"])
        assert filtered_word_moment(w, self.model) == self.s1[2] * self.s1[1]
        assert word_moment_model(w, self.model) == self.s1[2] * self.s1[1]

    def test_order_overflow(self):
        w = Word.build([1] * 5, [1] * 5, ["all"] * 5)
        with pytest.raises(MomentOrderError):
            filtered_word_moment(w, self.model)

    @given(words_and_models())
    def test_three_evaluators_agree(self, wm):
        w, model = wm
        a = filtered_word_moment(w, model)
        assert a == filtered_word_moment_recursive(w, model)
        assert a == word_moment_model(w, model)


class TestConvolution:

    def test_single_site(self):
        cf = ColorFilterTuple.parse("1,2,1,2", "p2,all,empty,p3")
        seq = MomentSequence.from_moments([F(1, 2), F(1, 3), F(1, 5), F(1, 7)])
        w = Word.build([0] * 4, cf.colors, cf.filters)
        assert convolution_power(1, cf, seq) == filtered_word_moment(w, MomentModel({0: seq}))

    def test_frozen_values(self):
        # values from the brute-force site sum
        cf = ColorFilterTuple.parse("1,2,1,2", "p2,all,empty,p3")
        seq = MomentSequence.from_moments([F(1, 2), F(1, 3), F(1, 5), F(1, 7)])
        assert [convolution_power(N, cf, seq) for N in (1, 2, 3)] == [F(1, 9), F(91, 72), F(35, 6)]
        cf = ColorFilterTuple.parse("1,1,2,1,1", "p1,p2,p2,p2,p1")
        seq = MomentSequence.from_moments([1, 2, 3, 4, 5])
        assert [convolution_power(N, cf, seq) for N in (1, 2, 3)] == [4, 112, 684]

    @pytest.mark.parametrize("flt", [ALL, EMPTY, Filter.prefix(2)])
    @pytest.mark.parametrize("N", [1, 2, 5, 17])
    def test_centered_second_moment(self, flt, N):
        seq = MomentSequence.from_moments([0, 1])
        assert convolution_power(N, ColorFilterTuple((1, 1), (flt, flt)), seq) == N

    @pytest.mark.parametrize("N", [1, 2, 3, 10])
    def test_fourth_moment(self, N):
        seq = MomentSequence.from_moments([0, 1, 0, 0])
        assert convolution_power(N, uniform(4, ALL), seq) == 3 * N * (N - 1)

    def test_two_sites_by_hand(self):
        m1, m2 = F(3, 5), F(7, 2)
        seq = MomentSequence.from_moments([m1, m2])
        # tuples (1,1),(2,2) give m2; (1,2),(2,1) give m1^2
        assert convolution_power_bruteforce(2, uniform(2, ALL), seq) == 2 * m2 + 2 * m1 ** 2

    def test_guards(self):
        seq = MomentSequence.from_moments([0, 1, 0])
        with pytest.raises(WorkLimitError):
            convolution_power_bruteforce(10, uniform(3, ALL), seq, work_limit=100)
        with pytest.raises(MomentOrderError):
            convolution_power(2, uniform(4, ALL), seq)
        with pytest.raises(ValueError):
            convolution_power(0, uniform(2, ALL), seq)

    @settings(max_examples=40)
    @given(color_filter_tuples(max_size=5), st.integers(1, 4), st.data())
    def test_matches_bruteforce(self, cf, N, data):
        seq = MomentSequence.from_moments(
            data.draw(st.lists(rationals, min_size=len(cf), max_size=len(cf))))
        assert convolution_power(N, cf, seq) == convolution_power_bruteforce(N, cf, seq)

    def test_falling_factorial(self):
        assert [falling_factorial(5, p) for p in range(7)] == [1, 5, 20, 60, 120, 120, 0]


class TestLimits:

    @pytest.mark.parametrize("n", range(1, 9))
    def test_clt_classical_and_boolean(self, n):
        want = 0 if n % 2 else double_factorial(n - 1)
        assert clt_limit(uniform(n, ALL)) == want
        assert clt_limit(uniform(n, EMPTY)) == (1 - n % 2)

    def test_clt_examples(self):
        assert clt_limit(uniform(4, ALL)) == 3
        assert clt_limit(uniform(6, EMPTY)) == 1
        assert clt_limit(ColorFilterTuple.parse("1,2,1", "all,all,all")) == 0

    @given(color_filter_tuples(max_size=8))
    def test_clt_counts_pairs(self, cf):
        from filtered_noise.oracles import adapted_partitions_bruteforce
        if len(cf) <= 7:
            assert clt_limit(cf) == len(adapted_partitions_bruteforce(cf, pair_only=True))

    def test_normalized_second_moment(self):
        seq = MomentSequence.rademacher(2)
        for N in (1, 3, 10, 1000):
            assert clt_normalized(N, uniform(2, ALL), seq) == 1

    def test_normalized_odd(self):
        seq = MomentSequence.rademacher(5)
        assert clt_normalized(7, uniform(5, ALL), seq) == 0
        skew = MomentSequence.from_moments([0, 1, 2])
        val = clt_normalized(4, uniform(3, ALL), skew)
        assert isinstance(val, float) and val == pytest.approx(4 * 2 / 8)

    def test_normalized_needs_standardized_moments(self):
        with pytest.raises(ValueError):
            clt_normalized(3, uniform(2, ALL), MomentSequence.from_moments([1, 1]))

    @pytest.mark.parametrize("case", [("1,1,1,1", "all,all,all,all"),
                                      ("1,2,2,1,1,2", "all,p2,empty,p3,all,p2"),
                                      ("1,1,1,1,1,1", "empty,empty,empty,empty,empty,empty")])
    def test_normalized_converges(self, case):
        cf = ColorFilterTuple.parse(*case)
        seq = MomentSequence.rademacher(6)
        limit = clt_limit(cf)
        errs = [abs(clt_normalized(N, cf, seq) - limit) for N in (10, 100, 1000, 10000)]
        assert all(a > b for a, b in zip(errs, errs[1:])) or not any(errs)
        assert errs[-1] * 10000 <= 100

    def test_poisson_examples(self):
        lam = F(3, 2)
        assert poisson_limit(uniform(3, ALL), {1: 1}) == 5
        assert poisson_limit(uniform(2, EMPTY), {1: lam}) == lam * (1 + lam)
        assert poisson_limit(uniform(1, EMPTY, color=4), {4: lam}) == lam
        with pytest.raises(ValueError):
            poisson_limit(ColorFilterTuple.parse("1,2", "all,all"), {1: 1})

    @pytest.mark.parametrize("n", range(1, 8))
    def test_poisson_closed_forms(self, n):
        assert poisson_limit(uniform(n, ALL), {1: 1}) == bell(n)
        for lam in (F(1), F(2), F(1, 3)):
            assert poisson_limit(uniform(n, ALL), {1: lam}) == closed_form_oracles("classical_poisson", n, lam)
            assert poisson_limit(uniform(n, EMPTY), {1: lam}) == lam * (1 + lam) ** (n - 1)

    def test_poisson_is_limit_of_convolution(self):
        # a {0,1} variable with success probability lam/N
        cf = ColorFilterTuple.parse("1,1,2,1", "all,p2,all,empty")
        lam = F(2)
        limit = poisson_limit(cf, {1: lam, 2: lam})
        errs = [abs(convolution_power(N, cf, MomentSequence.constant(lam / N, 4)) - limit)
                for N in (10, 100, 1000)]
        assert errs[0] > errs[1] > errs[2] and errs[2] < F(1, 10)


class TestMFree:

    def test_terms(self):
        assert len(mfree_terms(1)) == 1 and len(mfree_terms(3)) == 5
        assert mfree_terms(2) == [(1, Filter.empty(), 1), (2, Filter.prefix(2), 1),
                                  (2, Filter.prefix(1), -1)]

    # even moments 2, 4, 6 for m = 1, 2, 3, 4; the m = 2 column counts
    # Dyck paths of height at most two
    TABLE = {1: [1, 1, 1], 2: [1, 2, 4], 3: [1, 2, 5], 4: [1, 2, 5]}

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_clt_table(self, m):
        assert [mfree_sample_moment(m, 2 * p) for p in (1, 2, 3)] == self.TABLE[m]

    def test_catalan_when_m_large(self):
        for p in (1, 2, 3):
            for m in range(p, 5):
                assert mfree_sample_moment(m, 2 * p) == catalan(p) == count_noncrossing_pairings(2 * p)

    def test_monotone_in_m(self):
        for p in (2, 3):
            vals = [mfree_sample_moment(m, 2 * p) for m in (1, 2, 3)]
            assert vals == sorted(vals) and vals[-1] == catalan(p)

    def test_odd_vanish(self):
        assert mfree_sample_moment(3, 5) == 0

    def test_poisson(self):
        lam = F(1, 2)
        for n in (1, 2, 3, 4):
            assert mfree_sample_moment(1, n, "poisson", lam) == closed_form_oracles("boolean_poisson", n, lam)
            assert mfree_sample_moment(n, n, "poisson", lam) == closed_form_oracles("free_poisson", n, lam)
        assert [mfree_sample_moment(m, 4, "poisson", 1) for m in (1, 2, 3)] == [8, 14, 14]

    def test_errors(self):
        with pytest.raises(ValueError):
            mfree_sample_moment(2, 4, "gumbel")
        with pytest.raises(ValueError):
            mfree_sample_moment(2, 4, "poisson")
        with pytest.raises(WorkLimitError):
            mfree_sample_moment(4, 8)


class TestPairings:

    def test_single_pair(self):
        c = 0.3 - 0.7j
        legs = [Leg("u", 1, ALL, False), Leg("v", 1, ALL, True)]
        assert pairing_expectation(legs, {("u", "v"): c}) == pytest.approx(c)
        assert pairing_expectation(legs[::-1], {("u", "v"): c}) == 0

    def test_conjugate_entry_used(self):
        legs = [Leg("u", 1, ALL, False), Leg("v", 1, ALL, True)]
        assert pairing_expectation(legs, {("v", "u"): 2j}) == pytest.approx(-2j)

    def test_inconsistent_gram(self):
        legs = [Leg("u", 1, ALL, False), Leg("v", 1, ALL, True)]
        with pytest.raises(ValueError):
            pairing_expectation(legs, {("u", "v"): 1j, ("v", "u"): 1j})

    def test_colors_must_match(self):
        legs = [Leg("u", 1, ALL, False), Leg("v", 2, ALL, True)]
        assert pairing_expectation(legs, {("u", "v"): 1}) == 0

    def test_boolean_alternating(self):
        # a a* a a* with Empty filters: only the interval pairing survives
        legs = [Leg(i, 1, EMPTY, i % 2 == 1) for i in range(4)]
        gram = {(a, b): 1.0 for a in range(4) for b in range(4)}
        assert pairing_expectation(legs, gram) == pytest.approx(1)
        assert pairing_expectation(legs[:3], gram) == 0


class TestWhiteNoise:

    def test_constant_generator_is_touchard(self):
        for n in range(1, 6):
            for t in (F(1), F(1, 2)):
                cf = uniform(n, ALL)
                assert white_noise_moment(lambda B, t: t, cf, t) == poisson_limit(cf, {1: t})
        assert white_noise_moment(lambda B, t: t, uniform(3, ALL), 1) == 5
        assert white_noise_moment(lambda B, t: t, uniform(1, ALL), F(3, 4)) == F(3, 4)

    def test_pair_generator_is_gaussian(self):
        gen = lambda B, t: t if len(B) == 2 else 0  # noqa: E731
        for n in (2, 4, 6):
            assert white_noise_moment(gen, uniform(n, ALL), F(2)) == 2 ** (n // 2) * double_factorial(n - 1)


class TestClosedForms:

    def test_examples(self):
        assert closed_form_oracles("classical_gaussian", 6) == 15
        assert closed_form_oracles("boolean_poisson", 3, 2) == 18
        assert closed_form_oracles("classical_poisson", 2, 1) == 2
        assert closed_form_oracles("free_gaussian", 8) == 14
        assert [closed_form_oracles("free_poisson", n, 1) for n in range(1, 6)] == [1, 2, 5, 14, 42]
        assert closed_form_oracles("boolean_gaussian", 0) == 1

    def test_errors(self):
        with pytest.raises(ValueError):
            closed_form_oracles("cauchy", 2)
        with pytest.raises(ValueError):
            closed_form_oracles("free_poisson", 2)
