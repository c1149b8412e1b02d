"""JIT shim: numba kernels with a pure-numpy/Python fallback.

Set DIOLAB_DISABLE_JIT=1 to run every hot kernel through its fallback path.
The fallback is the reference implementation used to validate the compiled
kernels (see tests and benchmarks/bench_kernels.py); it is much slower.
"""

import os

JIT_ENABLED = os.environ.get("DIOLAB_DISABLE_JIT", "0") != "1"

if JIT_ENABLED:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover - numba is a hard dep, belt and braces
        JIT_ENABLED = False

if not JIT_ENABLED:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    prange = range


def set_threads(count):
    """Pin the numba thread pool size; no-op in fallback mode."""
    if JIT_ENABLED and count:
        import numba

        numba.set_num_threads(max(1, int(count)))
