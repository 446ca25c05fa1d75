"""Backend selection for the partial-trace hot loop.

The compiled extension is used when it imports; setting
``MARKOVCERT_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

import numpy as np

from . import _ptrace_fallback

_FORCE_PURE = os.environ.get("MARKOVCERT_PURE_PYTHON", "") not in ("", "0")

_compiled = None
if not _FORCE_PURE:
    try:
        from . import _ptrace as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
BACKENDS = {"python": _ptrace_fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled


def mixed_radix_offsets(dims, positions):
    """Full row-major index contributed by each joint value of ``positions``.

    The joint value runs row-major over ``dims[positions[0]], dims[positions[1]], ...``.
    With ``positions`` a permutation of all sites this is the index map of
    the permuted operator.
    """
    dims = [int(d) for d in dims]
    strides = np.ones(len(dims), dtype=np.int64)
    for i in range(len(dims) - 2, -1, -1):
        strides[i] = strides[i + 1] * dims[i + 1]
    off = np.zeros(1, dtype=np.int64)
    for p in positions:
        off = (off[:, None] + np.arange(dims[p], dtype=np.int64) * strides[p]).ravel()
    return off


def ptrace(matrix, dims, keep_positions, hermitian=True, backend=None):
    """Reduce ``matrix`` on factors ``dims`` to the factors at ``keep_positions``.

    Kept factors appear in the order given by ``keep_positions``.
    """
    mod = BACKENDS[backend or BACKEND]
    keep_positions = list(keep_positions)
    traced = [p for p in range(len(dims)) if p not in keep_positions]
    keep_off = mixed_radix_offsets(dims, keep_positions)
    trace_off = mixed_radix_offsets(dims, traced)
    rho = np.ascontiguousarray(matrix, dtype=np.complex128)
    fn = mod.ptrace_offsets if hermitian else mod.ptrace_offsets_general
    return fn(rho, keep_off, trace_off)
