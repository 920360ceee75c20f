"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when importable, unless the environment
variable ``ONLINEALLOC_PURE`` is set to a non-empty value other than ``0``.
"""

import os

from . import _reference

BACKEND = "python"
_pure = os.environ.get("ONLINEALLOC_PURE", "") not in ("", "0")

if not _pure:
    try:
        from ._core import dual_segment as _compiled_segment
    except ImportError:  # extension not built
        _compiled_segment = None
else:
    _compiled_segment = None

if _compiled_segment is not None:
    BACKEND = "cython"
    dual_segment = _compiled_segment
else:
    dual_segment = _reference.dual_segment

reference_segment = _reference.dual_segment
compiled_segment = _compiled_segment

EUCLIDEAN = _reference.EUCLIDEAN
SHIFTED_ENTROPY = _reference.SHIFTED_ENTROPY

__all__ = ["dual_segment", "reference_segment", "compiled_segment", "BACKEND",
           "EUCLIDEAN", "SHIFTED_ENTROPY"]
