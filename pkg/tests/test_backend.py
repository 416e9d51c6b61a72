import importlib
import random

import pytest

from filtered_noise import _backend, _tally_py


def _random_case(rng, n):
    colors = [rng.randrange(3) for _ in range(n)]
    blocked = [[rng.random() < 0.3 for _ in range(n)] for _ in range(n)]
    return colors, blocked


@pytest.mark.skipif(_backend.NAME != "cython", reason="compiled walker not built")
@pytest.mark.parametrize("mode", [(r, a, p) for r in (False, True)
                                  for a in (False, True) for p in (False, True)])
def test_compiled_matches_python(mode):
    compiled = importlib.import_module("filtered_noise._tally")
    rng = random.Random(7)
    relative, adapted_only, pair_only = mode
    for _ in range(60):
        colors, blocked = _random_case(rng, rng.randint(1, 7))
        args = (colors, blocked, relative, adapted_only, pair_only)
        assert compiled.tally(*args) == _tally_py.tally(*args)
        assert compiled.collect(*args) == _tally_py.collect(*args)


def test_forced_fallback(monkeypatch):
    monkeypatch.setenv("FILTERED_NOISE_PURE_PYTHON", "1")
    mod = importlib.reload(_backend)
    try:
        assert mod.NAME == "python"
        assert mod.tally is _tally_py.tally
    finally:
        monkeypatch.delenv("FILTERED_NOISE_PURE_PYTHON")
        importlib.reload(_backend)


def test_empty_ground_set():
    assert _tally_py.tally([], [], True, False, False) == {}
    assert _backend.collect([], [], True, False, False) == []
