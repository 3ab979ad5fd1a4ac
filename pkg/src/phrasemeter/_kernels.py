"""Kernel selection: compiled extension when available, numpy fallback else.

``KERNEL_BACKEND`` reports which implementation is active; set the
environment variable ``PHRASEMETER_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _markov_py

if os.environ.get("PHRASEMETER_PURE_PYTHON"):
    _impl = _markov_py
else:
    try:
        from . import _markov_core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _markov_py

KERNEL_BACKEND: str = _impl.BACKEND


def masked_logmarginal(log_init, log_trans, ids, masked) -> float:
    log_init = np.ascontiguousarray(log_init, dtype=np.float64)
    log_trans = np.ascontiguousarray(log_trans, dtype=np.float64)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    masked = np.ascontiguousarray(masked, dtype=np.int64)
    return float(_impl.masked_logmarginal(log_init, log_trans, ids, masked))
