"""Pick the mirror-descent loop implementation at import time.

The compiled ``_mda_core`` extension is used when it was built; otherwise the
numpy fallback. Set ``RKBS_MIRROR_BACKEND=python`` to force the fallback.
"""

import os

from . import _mda_py

python_run_mda = _mda_py.run_mda

try:
    from ._mda_core import run_mda as compiled_run_mda
except ImportError:  # extension not built
    compiled_run_mda = None

if compiled_run_mda is not None and os.environ.get("RKBS_MIRROR_BACKEND", "").lower() != "python":
    run_mda = compiled_run_mda
    BACKEND = "cython"
else:
    run_mda = python_run_mda
    BACKEND = "python"


def available_backends():
    out = {"python": python_run_mda}
    if compiled_run_mda is not None:
        out["cython"] = compiled_run_mda
    return out
