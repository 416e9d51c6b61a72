"""Pick the compiled partition walker when it was built, else the Python one.

Set ``FILTERED_NOISE_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("FILTERED_NOISE_PURE_PYTHON", "") not in ("", "0"):
    from filtered_noise import _tally_py as _impl
    NAME = "python"
else:
    try:
        from filtered_noise import _tally as _impl
        NAME = "cython"
    except ImportError:  # extension not built
        from filtered_noise import _tally_py as _impl
        NAME = "python"

tally = _impl.tally
collect = _impl.collect
