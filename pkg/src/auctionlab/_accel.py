"""Pick the compiled kernels when available, else the numpy fallback.

Set ``AUCTIONLAB_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
upper_hull = _kernels_py.upper_hull
explicit_vcg = _kernels_py.explicit_vcg

if os.environ.get("AUCTIONLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        upper_hull = _ckernels.upper_hull
        explicit_vcg = _ckernels.explicit_vcg
        BACKEND = "cython"
