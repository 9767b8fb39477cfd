"""Hot-kernel backend selection.

Prefers the compiled extension when it was built; falls back to the numpy
implementation otherwise. Set FORGE_NO_NATIVE=1 to force the fallback.
"""

import os

from ._fallback import FREE, OCCUPIED, UNKNOWN, WINDOW

if os.environ.get("FORGE_NO_NATIVE"):
    from . import _fallback as _impl
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _fallback as _impl

BACKEND = _impl.BACKEND
cast_rays = _impl.cast_rays
integrate_rays = _impl.integrate_rays

__all__ = [
    "BACKEND",
    "FREE",
    "OCCUPIED",
    "UNKNOWN",
    "WINDOW",
    "cast_rays",
    "integrate_rays",
]
