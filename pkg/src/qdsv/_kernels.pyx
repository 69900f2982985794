# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path-stepping kernel; mirrors qdsv._kernels_py operation for operation.

Z has shape (n_steps, n_paths) and B shape (n_paths,).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()


def simulate_paths(double R0, double R1, double R2, double nu, double rho,
                   double x0, double sigma0, double dt,
                   int qz_measure, int log_euler,
                   const double[:, ::1] Z, const double[::1] B):
    cdef Py_ssize_t n_steps = Z.shape[0], n_paths = Z.shape[1]
    cdef Py_ssize_t i, k
    cdef double z = R1 / nu
    cdef double sq = sqrt(dt)
    cdef double rho_c = sqrt(1.0 - rho * rho)
    cdef double s, s2, dw, drift, s_next
    cdef double x_drift, y_drift
    if qz_measure:
        x_drift = z * rho - 0.5
        y_drift = 0.5 * z * z
    else:
        x_drift = -0.5
        y_drift = -0.5 * z * z

    out_x = np.empty(n_paths)
    out_s = np.empty(n_paths)
    out_y = np.empty(n_paths)
    integ_arr = np.zeros(n_paths)
    cdef double[::1] ox = out_x, os = out_s, oy = out_y, oi = integ_arr

    with nogil:
        for i in range(n_paths):
            os[i] = sigma0
            ox[i] = x0
            oy[i] = 0.0
        # steps outer, paths inner: independent paths keep the pipeline full
        for k in range(n_steps):
            for i in range(n_paths):
                s = os[i]
                dw = sq * Z[k, i]
                s2 = s * s
                if qz_measure:
                    drift = R0 * R2 + s * (R1 * R2 - R0)
                else:
                    drift = (R0 + R1 * s) * (R2 - s)
                ox[i] = ox[i] + x_drift * s2 * dt + rho * s * dw
                oy[i] = oy[i] + y_drift * s2 * dt + z * s * dw
                oi[i] = oi[i] + s2 * dt
                if log_euler:
                    s_next = s * exp((drift / s - 0.5 * nu * nu) * dt + nu * dw)
                else:
                    s_next = s + drift * dt + nu * s * dw + 0.5 * nu * nu * s * (dw * dw - dt)
                    if s_next < 0.0:
                        s_next = 0.0
                os[i] = s_next
        for i in range(n_paths):
            ox[i] = ox[i] + rho_c * sqrt(oi[i]) * B[i]
    return out_x, out_s, out_y
