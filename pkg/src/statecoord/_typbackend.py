"""Select the typicality-scan backend at import time.

The compiled extension is used when available; setting STATECOORD_PURE=1
forces the numpy fallback (used by the benchmark to compare both).
"""
from __future__ import annotations

import os

if os.environ.get("STATECOORD_PURE") == "1":
    HAVE_EXT = False
    from ._typ_py import typical_mask
else:
    try:
        from ._fasttyp import typical_mask  # type: ignore[no-redef]

        HAVE_EXT = True
    except ImportError:  # pragma: no cover - build-environment dependent
        HAVE_EXT = False
        from ._typ_py import typical_mask  # type: ignore[no-redef]

__all__ = ["typical_mask", "HAVE_EXT"]
