"""Select the kernel backend at import time.

The compiled extension is preferred; set ``BMP_FORCE_PYTHON=1`` to use the
pure-Python fallback.
"""

import os

from . import _pykernels

if os.environ.get("BMP_FORCE_PYTHON", "") not in ("", "0"):
    backend = _pykernels
else:
    try:
        from . import _ckernels as backend
    except ImportError:  # extension not built
        backend = _pykernels

BACKEND = backend.NAME

upper_bounds_raw = backend.upper_bounds_raw
upper_bounds_compressed = backend.upper_bounds_compressed
decode_term = backend.decode_term
counting_sort_blocks = backend.counting_sort_blocks
evaluate_block = backend.evaluate_block
process_blocks = backend.process_blocks


def available_backends():
    """Every importable backend module, fallback first."""
    mods = [_pykernels]
    try:
        from . import _ckernels

        mods.append(_ckernels)
    except ImportError:
        pass
    return mods
