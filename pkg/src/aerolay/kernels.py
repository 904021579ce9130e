"""Hot-loop dispatch: the compiled extension when built, numpy otherwise.

Set ``AEROLAY_PURE_PYTHON=1`` to force the numpy path.
"""
from __future__ import annotations

import math
import os

from . import _kernels_py

try:
    if os.environ.get("AEROLAY_PURE_PYTHON"):
        raise ImportError("pure-python path requested")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "numpy"


def gain_params(antenna, h_tx, h_b):
    if antenna is None:
        return None
    return (
        int(antenna.n_elements),
        float(antenna.spacing_wavelengths),
        math.cos(math.radians(antenna.downtilt_deg)),
        10.0 ** (antenna.element_gain_max_db / 10.0),
        float(h_tx - h_b),
    )


def received_power_sum(owner, r, dh, states, amp, ref, alpha, antenna, h_b, h_tx, n_drops, impl=None):
    """Per-drop aggregate of ``amp * gain / path_loss`` over interferers."""
    mod = impl or _impl
    return mod.segment_received_power(
        owner, r, float(dh), states, amp, tuple(ref), tuple(alpha), gain_params(antenna, h_tx, h_b), int(n_drops)
    )
