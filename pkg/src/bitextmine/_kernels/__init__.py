"""Kernel selection: compiled extension if built, NumPy fallback otherwise.

Set ``BITEXTMINE_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by tests that exercise both paths).
"""

import os

_force_pure = os.environ.get("BITEXTMINE_PURE_PYTHON", "0") not in ("", "0")

if _force_pure:
    from . import _scan_py as _impl

    USING_COMPILED = False
else:
    try:
        from . import _scan as _impl  # type: ignore[attr-defined]

        USING_COMPILED = True
    except ImportError:
        from . import _scan_py as _impl

        USING_COMPILED = False

scan_block = _impl.scan_block
MARGIN_ABSOLUTE = _impl.MARGIN_ABSOLUTE
MARGIN_RATIO = _impl.MARGIN_RATIO
MARGIN_DISTANCE = _impl.MARGIN_DISTANCE


def available_impls():
    """Name -> module map of every importable kernel implementation."""
    from . import _scan_py

    impls = {"numpy": _scan_py}
    try:
        from . import _scan  # type: ignore[attr-defined]

        impls["compiled"] = _scan
    except ImportError:
        pass
    return impls
