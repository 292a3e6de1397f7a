"""BLAS threadpool management.

numpy and scipy each bundle their own OpenBLAS; with both pools spinning,
the solver's many small dense operations contend for cores and slow down by
one to two orders of magnitude. BLAS threading is therefore pinned to one
thread at import (set SOSPOLY_KEEP_BLAS_THREADS=1 to opt out); long single
factorizations that benefit from threads re-enable them locally via
:func:`blas_parallel`.
"""

from __future__ import annotations

import contextlib
import os

try:
    import threadpoolctl
except ImportError:  # pragma: no cover
    threadpoolctl = None

_limiter = None


def limit_blas_threads():
    global _limiter
    if threadpoolctl is None or os.environ.get("SOSPOLY_KEEP_BLAS_THREADS"):
        return
    if _limiter is None:
        # force both BLAS-backed pools to exist before limiting them
        import numpy  # noqa: F401
        import scipy.linalg  # noqa: F401

        _limiter = threadpoolctl.threadpool_limits(limits=1, user_api="blas")


def blas_parallel():
    """Context that restores multi-threaded BLAS for one large operation."""
    if threadpoolctl is None or _limiter is None:
        return contextlib.nullcontext()
    return threadpoolctl.threadpool_limits(limits=os.cpu_count() or 1,
                                           user_api="blas")
