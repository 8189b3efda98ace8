"""Hot loops: Viterbi, trellis forward recursion, CRC-aided SCL decoding.

The compiled extension is used when it was built; otherwise, or when
``UMPCODES_PURE_PYTHON=1`` is set, the numpy implementation is used.
"""

import os

from . import _pykernels

if os.environ.get("UMPCODES_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.NAME
viterbi = _impl.viterbi
forward = _impl.forward
scl = _impl.scl

__all__ = ["BACKEND", "viterbi", "forward", "scl"]
