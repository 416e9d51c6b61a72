"""Time the compiled partition walker against the pure-Python one.

Usage: python benchmarks/bench_tally.py [--repeat R] [--max-n N]

Both walkers receive identical inputs and must return identical
histograms; the script aborts if they ever disagree.
"""
import argparse
import random
import timeit

from filtered_noise import _tally_py
from filtered_noise.partitions import ALL, ColorFilterTuple, Filter, _kernel_inputs

try:
    from filtered_noise import _tally
except ImportError:  # extension not built
    _tally = None


def sample_cf(n: int, rng: random.Random) -> ColorFilterTuple:
    pool = [ALL, Filter.empty(), Filter.prefix(2), Filter.prefix(3)]
    return ColorFilterTuple(tuple(rng.randint(1, 2) for _ in range(n)),
                            tuple(rng.choice(pool) for _ in range(n)))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--max-n", type=int, default=10)
    args = ap.parse_args()
    if _tally is None:
        raise SystemExit("compiled walker not built; reinstall with Cython available")

    rng = random.Random(0)
    print(f"{'n':>3} {'mode':<10} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for n in range(6, args.max_n + 1):
        cf = sample_cf(n, rng)
        color_ids, blocked = _kernel_inputs(cf)
        for mode, kw in [("all", dict(adapted_only=False, pair_only=False)),
                         ("adapted", dict(adapted_only=True, pair_only=False))]:
            call = dict(relative=True, **kw)
            py = _tally_py.tally(color_ids, blocked, **call)
            cy = _tally.tally(color_ids, blocked, **call)
            if py != cy:
                raise SystemExit(f"walkers disagree at n={n}, mode={mode}")
            t_py = min(timeit.repeat(lambda: _tally_py.tally(color_ids, blocked, **call),
                                     number=1, repeat=args.repeat))
            t_cy = min(timeit.repeat(lambda: _tally.tally(color_ids, blocked, **call),
                                     number=1, repeat=args.repeat))
            print(f"{n:>3} {mode:<10} {t_py:>10.4f} {t_cy:>10.4f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
