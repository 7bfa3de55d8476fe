"""Batch kernels, backed by the compiled extension when it is importable.

Set ``ROBUSTIMP_PURE_PYTHON=1`` before import to force the numpy fallback.
"""

from __future__ import annotations

import os

import numpy as np

from robustimp import _pykernels

py_batch_expected_utilities = _pykernels.batch_expected_utilities
py_first_chain_violation = _pykernels.first_chain_violation

try:
    if os.environ.get("ROBUSTIMP_PURE_PYTHON"):
        raise ImportError("pure-python backend forced")
    from robustimp import _ckernels
except ImportError:
    _ckernels = None

HAVE_EXTENSION = _ckernels is not None
BACKEND = "cython" if HAVE_EXTENSION else "numpy"


def _c(x):
    return np.ascontiguousarray(x, dtype=float)


if HAVE_EXTENSION:

    def c_batch_expected_utilities(xs, ys, left, right, payoffs, beliefs):
        return _ckernels.batch_expected_utilities(_c(xs), _c(ys), _c(left), _c(right),
                                                  _c(payoffs), _c(beliefs))

    def c_first_chain_violation(xs, ys, left, right, payoffs, beliefs, eps):
        return int(_ckernels.first_chain_violation(_c(xs), _c(ys), _c(left), _c(right),
                                                   _c(payoffs), _c(beliefs), float(eps)))

    batch_expected_utilities = c_batch_expected_utilities
    first_chain_violation = c_first_chain_violation
else:
    c_batch_expected_utilities = None
    c_first_chain_violation = None
    batch_expected_utilities = py_batch_expected_utilities
    first_chain_violation = py_first_chain_violation
