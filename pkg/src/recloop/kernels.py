"""Backend selection for the closed-loop kernel.

The compiled extension is used when it imports; otherwise the numpy
version. Setting ``RECLOOP_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _fallback

fallback_run_users = _fallback.run_users

try:
    if os.environ.get("RECLOOP_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from ._kernels import run_users as compiled_run_users
except ImportError:
    compiled_run_users = None

if compiled_run_users is not None:
    run_users = compiled_run_users
    BACKEND = "cython"
else:
    run_users = fallback_run_users
    BACKEND = "python"
