"""Kernel selection: compiled extension if importable, numpy fallback otherwise.

Set ``QFOCKLAB_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

try:
    if os.environ.get("QFOCKLAB_PURE_PYTHON"):
        raise ImportError("pure-python kernels requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

gram_level = _impl.gram_level
crossing_histogram = _impl.crossing_histogram
