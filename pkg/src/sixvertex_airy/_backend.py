"""Select the compiled kernels when they import, otherwise the numpy fallback.

Setting SIXVERTEX_AIRY_PURE=1 forces the fallback.
"""

from __future__ import annotations

import os

from . import _purepy

kernels = _purepy
COMPILED = False

if os.environ.get("SIXVERTEX_AIRY_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        kernels = _compiled
        COMPILED = True

sweep_columns = kernels.sweep_columns
direct_term_sum = kernels.direct_term_sum
