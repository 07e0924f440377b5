"""Entrywise solver kernels with import-time backend selection.

The compiled extension is used when it imported cleanly; otherwise the
pure-Python reference takes over.  Setting the environment variable
``TGRAPH_PURE=1`` forces the pure backend (used by the benchmark and the
backend-equivalence tests).  Both backends implement the same contract and
return bit-identical results.
"""

import os

from . import pure

MAX_HINGES = pure.MAX_HINGES

_compiled = None
if not os.environ.get("TGRAPH_PURE"):
    try:
        from . import _entrysolve as _compiled
    except ImportError:
        _compiled = None

_active = _compiled if _compiled is not None else pure

BACKEND = _active.BACKEND_NAME
solve_entries = _active.solve_entries
solve_piecewise = _active.solve_piecewise


def available_backends() -> dict:
    """Name -> module map of importable backends."""
    out = {"python": pure}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
