"""Select the compiled kernels when available, else the pure-Python ones.

Set ``BILAPNET_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

kernels = _kernels_py
BACKEND = "python"

if os.environ.get("BILAPNET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

closed_form_bilaplacian = kernels.closed_form_bilaplacian
connected_edge_masks = kernels.connected_edge_masks
assemble_hermite = kernels.assemble_hermite
kernel_sup = kernels.kernel_sup
