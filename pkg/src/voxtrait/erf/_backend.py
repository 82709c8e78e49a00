"""Selects the tree-growth kernel at import time.

The compiled Cython kernel is used when its extension module imports;
otherwise the pure-numpy fallback takes over. Setting the environment
variable VOXTRAIT_BACKEND to "python" or "cython" forces the choice
(forcing "cython" raises if the extension is absent). Both kernels are
deterministic per seed; they are not bit-identical to each other, since
they accumulate floating-point sums in different orders.
"""

from __future__ import annotations

import os

_forced = os.environ.get("VOXTRAIT_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _tree_py as _impl

    BACKEND = "python"
elif _forced == "cython":
    from . import _tree_core as _impl  # noqa: F401  (raises if not built)

    BACKEND = "cython"
elif _forced:
    raise ValueError(
        f"VOXTRAIT_BACKEND={_forced!r} not recognized; use 'python' or 'cython'"
    )
else:
    try:
        from . import _tree_core as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _tree_py as _impl

        BACKEND = "python"

grow_tree = _impl.grow_tree
