"""Hot Monte-Carlo kernels with a compiled core and a numpy fallback.

The compiled module is used when it imports; set ``QSTEER_PURE_PYTHON=1`` to
force the fallback. ``BACKEND`` names the active implementation.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("QSTEER_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"


def respond(psi, frame, pick_max=False):
    """Outcome chosen for each row of `psi`: argmin (or argmax) of |<f_a|psi>|^2 over frame columns."""
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    frame = np.ascontiguousarray(frame, dtype=np.complex128)
    return _impl.respond(psi, frame, bool(pick_max))


def accumulate_outer(psi, labels, n_labels):
    """Return ``(sums, sq, counts)`` of |psi><psi| grouped by integer label."""
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    labels = np.ascontiguousarray(labels, dtype=np.intp)
    return _impl.accumulate_outer(psi, labels, int(n_labels))


__all__ = ["BACKEND", "respond", "accumulate_outer"]
