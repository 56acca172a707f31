"""Backend selection for the hot loops.

The compiled extension is used when it was built; set ``QGRAD_PURE_PYTHON=1``
to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("QGRAD_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"


def phase_noise(key: int, steps: int, factors: int, npoints: int, half_width: float):
    """Summed uniform phase errors for ``steps * factors`` diagonal factors.

    Entry ``p`` of the result is the sum over all (step, factor) pairs of a
    value uniform in ``[-half_width, half_width]``, drawn from a counter-based
    splitmix64 stream keyed by ``key``. Both backends produce identical bits.
    """
    key = int(key) % (1 << 64)
    return _impl.phase_noise(key, int(steps), int(factors), int(npoints), float(half_width))


def compensated_sum(values) -> float:
    """Order-insensitive sum of a 1-D float array."""
    import numpy as np

    return float(_impl.compensated_sum(np.ascontiguousarray(values, dtype=np.float64)))
