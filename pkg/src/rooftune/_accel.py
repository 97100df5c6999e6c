"""Backend switch for the numeric kernels.

Set ``ROOFTUNE_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
Numba is also skipped when it cannot be imported.
"""

import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

DISABLED = os.environ.get("ROOFTUNE_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

USE_NUMBA = HAVE_NUMBA and not DISABLED


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
