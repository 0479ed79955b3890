"""Select the compiled flow kernels when available, else the numpy fallback.

Set GITSTRATA_PURE_PYTHON=1 to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("GITSTRATA_PURE_PYTHON"):
    from . import _flowcore_py as core

    BACKEND = "python"
else:
    try:
        from . import _flowcore as core  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _flowcore_py as core

        BACKEND = "python"

flow_rhs = core.flow_rhs
flow_diagnostics = core.flow_diagnostics
moment_parts = core.moment_parts

__all__ = ["BACKEND", "flow_rhs", "flow_diagnostics", "moment_parts"]
