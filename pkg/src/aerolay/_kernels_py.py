"""Pure-numpy reference implementation of the simulation hot loop."""
from __future__ import annotations

import math

import numpy as np

_SINGULAR = 1e-9


def segment_received_power(owner, r, dh, states, amp, ref, alpha, gain_params, n_drops):
    """Sum ``amp * gain / (ref[s] * d**alpha[s])`` per owning drop.

    ``gain_params`` is ``None`` (unit gain) or
    ``(n_elements, spacing_wavelengths, cos_tilt, element_gain_max, dz)``
    with ``dz = h_tx - h_bs`` the vertical offset seen from the BS.
    """
    r = np.asarray(r, dtype=float)
    d2 = r * r + dh * dh
    los = np.asarray(states) == 0
    logd = 0.5 * np.log(d2)
    loss = np.where(los, ref[0] * np.exp(alpha[0] * logd), ref[1] * np.exp(alpha[1] * logd))
    val = np.asarray(amp, dtype=float) / loss
    if gain_params is not None:
        n, spacing, cos_tilt, ge_max, dz = gain_params
        inv = 1.0 / np.sqrt(r * r + dz * dz)
        cos_t = dz * inv
        sin2 = (r * inv) ** 2
        x = math.pi * spacing * (cos_t - cos_tilt)
        den = np.sin(x)
        sing = np.abs(den) < _SINGULAR
        af = np.where(sing, float(n), np.sin(n * x) ** 2 / (n * np.where(sing, 1.0, den) ** 2))
        val = val * af * ge_max * sin2
    return np.bincount(np.asarray(owner, dtype=np.int64), weights=val, minlength=n_drops)[:n_drops]
