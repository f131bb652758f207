"""Kernel backend selection.

The hot enumeration kernels exist twice: a Cython extension
(``_core``) and a numpy fallback (``_core_py``) with identical
contracts and bit-identical outputs.  The compiled one is preferred
when its build succeeded; ``BACKEND`` records which is active.  The
``bench`` CLI subcommand compares the two.
"""

import math

try:
    from . import _core as _impl
    BACKEND = "cython"
except ImportError:  # extension not built; fall back
    from . import _core_py as _impl
    BACKEND = "python"

from . import _core_py

hc_scores = _impl.hc_scores
seq_probs = _impl.seq_probs
syndrome_keys = _impl.syndrome_keys
coset_min = _impl.coset_min


def make_ln_table(n: int):
    """Natural logs of 0..n (entry 0 unused, set to 0).

    Built once with math.log and handed to either backend, so both see
    numerically identical table entries.
    """
    import numpy as np
    table = np.zeros(n + 1)
    for i in range(1, n + 1):
        table[i] = math.log(i)
    return table


def available_backends():
    names = ["python"]
    if BACKEND == "cython":
        names.insert(0, "cython")
    return names


def get_backend(name: str):
    """Kernel module by name, for parity tests and benchmarks."""
    if name == "python":
        return _core_py
    if name == "cython":
        if BACKEND != "cython":
            raise ValueError("compiled kernels are not available")
        return _impl
    raise ValueError(f"unknown backend {name!r}")
