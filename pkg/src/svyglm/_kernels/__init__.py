"""Kernel backend selection.

The compiled Cython kernel is preferred when it was built; otherwise the
numpy fallback is used. Set SVYGLM_NO_EXT=1 to force the fallback (useful
for benchmarking and for exercising both paths in tests).
"""

import os

from ._codes import FAMILY_CODES, LINK_CODES

if os.environ.get("SVYGLM_NO_EXT"):
    from . import _numpy as _impl

    HAVE_EXT = False
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        HAVE_EXT = True
    except ImportError:
        from . import _numpy as _impl

        HAVE_EXT = False

BACKEND = "cython" if HAVE_EXT else "numpy"
glm_pass = _impl.glm_pass

__all__ = ["BACKEND", "HAVE_EXT", "FAMILY_CODES", "LINK_CODES", "glm_pass"]
