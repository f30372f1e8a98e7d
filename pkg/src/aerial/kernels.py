"""Hot numeric kernels, compiled when available.

The Cython extension ``_ckernels`` is used if it imports; otherwise the numpy
versions in ``_pykernels`` are.  Set ``AERIAL_PURE_PYTHON=1`` to force the
fallback.  ``BACKEND`` names the active implementation.
"""

import os

from . import _pykernels

if os.environ.get("AERIAL_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

block_softmax = _impl.block_softmax
block_bce = _impl.block_bce
itemset_counts = _impl.itemset_counts

__all__ = ["BACKEND", "block_softmax", "block_bce", "itemset_counts"]
