"""Decoder kernel selection.

The belief-propagation inner loop dominates total runtime, so it ships
as a compiled extension (``bitlink._core``) with a pure-numpy fallback
(``bitlink._core_py``) that implements the identical update rules.  The
extension is used when importable; set ``BITLINK_BACKEND=python`` to
force the fallback.  ``benchmarks/bench_decoder.py`` compares the two.
"""

import os

_forced = os.environ.get("BITLINK_BACKEND", "").strip().lower()

if _forced in ("", "cython", "c"):
    try:
        from ._core import bp_decode

        BACKEND = "cython"
    except ImportError:
        if _forced:
            raise
        from ._core_py import bp_decode

        BACKEND = "python"
elif _forced == "python":
    from ._core_py import bp_decode

    BACKEND = "python"
else:
    raise ImportError(f"unknown BITLINK_BACKEND value {_forced!r}")
