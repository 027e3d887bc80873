"""Backend selection for the OA-ITROX hot loop.

The compiled Cython extension ``olaz._itrox`` is used when it was built;
otherwise, or when the environment variable ``OLAZ_PURE_PYTHON=1`` is set,
the numpy implementation in ``olaz._itrox_py`` is used. Both expose
``itrox_loop`` with the same signature and return tuple.
"""

import os

from . import _itrox_py

try:
    from . import _itrox as _compiled
except ImportError:  # extension not built
    _compiled = None

LOOPS = {"python": _itrox_py.itrox_loop}
if _compiled is not None:
    LOOPS["compiled"] = _compiled.itrox_loop

if _compiled is not None and os.environ.get("OLAZ_PURE_PYTHON", "") != "1":
    BACKEND = "compiled"
else:
    BACKEND = "python"


def get_loop(name=None):
    """Return ``(name, itrox_loop)`` for ``name`` or the default backend."""
    name = BACKEND if name is None else name
    try:
        return name, LOOPS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(LOOPS)}") from None
