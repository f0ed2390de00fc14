"""Sweep-kernel backend selection.

Imports the compiled extension when present, otherwise falls back to the
pure-Python twin.  DRIFTBENCH_FORCE_PYTHON=1 forces the fallback (used by
the backend-equivalence tests and the benchmark).
"""

import os

from driftbench import _kernels_py

try:
    from driftbench import _kernels as _compiled
except ImportError:  # no compiled extension in this install
    _compiled = None

if _compiled is not None and os.environ.get("DRIFTBENCH_FORCE_PYTHON") != "1":
    _active = _compiled
    BACKEND = "cython"
else:
    _active = _kernels_py
    BACKEND = "python"

sweep = _active.sweep
python_sweep = _kernels_py.sweep
compiled_sweep = _compiled.sweep if _compiled is not None else None


def have_extension() -> bool:
    return _compiled is not None
