"""Kernel backend selection.

Prefers the compiled extension, falls back to the numpy implementations.
Set MCDIAR_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the cross-backend equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("MCDIAR_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
HAVE_COMPILED = BACKEND == "compiled"

directed_hausdorff = _impl.directed_hausdorff
gaussian_loglik_sum = _impl.gaussian_loglik_sum
gmm2_loglik_sum = _impl.gmm2_loglik_sum
