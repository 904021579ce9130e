# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fused loop for per-drop aggregate received power."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, log, sin, fabs, M_PI

cnp.import_array()


def segment_received_power(owner, r, double dh, states, amp, ref, alpha, gain_params, Py_ssize_t n_drops):
    cdef const cnp.int64_t[::1] own = np.ascontiguousarray(owner, dtype=np.int64)
    cdef const double[::1] rr = np.ascontiguousarray(r, dtype=np.float64)
    cdef const cnp.int8_t[::1] st = np.ascontiguousarray(states, dtype=np.int8)
    cdef const double[::1] aa = np.ascontiguousarray(amp, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.zeros(n_drops)
    cdef double[::1] out = out_arr
    cdef double ref_l = ref[0], ref_n = ref[1], al_l = alpha[0], al_n = alpha[1]
    cdef bint use_gain = gain_params is not None
    cdef int n_el = 1
    cdef double spacing = 0, cos_tilt = 0, ge_max = 1, dz = 0
    if use_gain:
        n_el, spacing, cos_tilt, ge_max, dz = gain_params
    cdef Py_ssize_t i, n = rr.shape[0]
    cdef double ri, d2, logd, loss, val, inv, x, den, num
    with nogil:
        for i in range(n):
            ri = rr[i]
            d2 = ri * ri + dh * dh
            logd = 0.5 * log(d2)
            if st[i] == 0:
                loss = ref_l * exp(al_l * logd)
            else:
                loss = ref_n * exp(al_n * logd)
            val = aa[i] / loss
            if use_gain:
                inv = 1.0 / sqrt(ri * ri + dz * dz)
                x = M_PI * spacing * (dz * inv - cos_tilt)
                den = sin(x)
                if fabs(den) < 1e-9:
                    num = n_el
                else:
                    num = sin(n_el * x)
                    num = num * num / (n_el * den * den)
                val = val * num * ge_max * (ri * inv) * (ri * inv)
            out[own[i]] += val
    return out_arr
