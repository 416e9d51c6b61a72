import random

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from filtered_noise.partitions import ColorFilterTuple, Filter

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def filters(draw, max_color=3):
    kind = draw(st.sampled_from(["all", "empty", "prefix", "set"]))
    if kind == "all":
        return Filter.all()
    if kind == "empty":
        return Filter.empty()
    if kind == "prefix":
        return Filter.prefix(draw(st.integers(1, max_color + 1)))
    return Filter.of(draw(st.sets(st.integers(1, max_color), max_size=max_color)))


@st.composite
def color_filter_tuples(draw, min_size=1, max_size=6, max_color=3):
    n = draw(st.integers(min_size, max_size))
    colors = draw(st.lists(st.integers(1, max_color), min_size=n, max_size=n))
    flts = draw(st.lists(filters(max_color), min_size=n, max_size=n))
    return ColorFilterTuple(tuple(colors), tuple(flts))


@pytest.fixture
def rng():
    return random.Random(12345)
