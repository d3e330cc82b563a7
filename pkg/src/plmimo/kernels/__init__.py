"""Hot numeric kernels with a numba and a pure-numpy implementation.

The backend is chosen once at import time from the ``PLMIMO_BACKEND``
environment variable: ``auto`` (default) uses numba when importable and
falls back to numpy, ``numba`` requires numba, ``numpy`` forces the
fallback.  Both implementations compute the same quantities; the
benchmark in ``benchmarks/bench_kernels.py`` compares them side by side.
"""

import os

_requested = os.environ.get("PLMIMO_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"PLMIMO_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    from . import _numpy as _impl
else:
    try:
        from . import _numba as _impl
    except ImportError:
        if _requested == "numba":
            raise
        from . import _numpy as _impl

BACKEND = _impl.NAME
bp_decode = _impl.bp_decode
candidate_distances = _impl.candidate_distances
maxlog_sift = _impl.maxlog_sift
lll_sweeps = _impl.lll_sweeps

__all__ = ["BACKEND", "bp_decode", "candidate_distances", "maxlog_sift", "lll_sweeps"]
