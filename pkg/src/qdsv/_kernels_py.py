"""Pure NumPy path-stepping kernel, vectorized across paths.

Z has shape (n_steps, n_paths) and B shape (n_paths,).
"""
import numpy as np


def simulate_paths(R0, R1, R2, nu, rho, x0, sigma0, dt, qz_measure, log_euler, Z, B):
    n_steps, n_paths = Z.shape
    z = R1 / nu
    sq = np.sqrt(dt)
    rho_c = np.sqrt(1.0 - rho * rho)
    if qz_measure:
        x_drift, y_drift = z * rho - 0.5, 0.5 * z * z
    else:
        x_drift, y_drift = -0.5, -0.5 * z * z
    s = np.full(n_paths, float(sigma0))
    lx = np.full(n_paths, float(x0))
    ly = np.zeros(n_paths)
    integ = np.zeros(n_paths)
    for k in range(n_steps):
        dw = sq * Z[k]
        s2 = s * s
        if qz_measure:
            drift = R0 * R2 + s * (R1 * R2 - R0)
        else:
            drift = (R0 + R1 * s) * (R2 - s)
        lx = lx + x_drift * s2 * dt + rho * s * dw
        ly = ly + y_drift * s2 * dt + z * s * dw
        integ = integ + s2 * dt
        if log_euler:
            s = s * np.exp((drift / s - 0.5 * nu * nu) * dt + nu * dw)
        else:
            s = s + drift * dt + nu * s * dw + 0.5 * nu * nu * s * (dw * dw - dt)
            s = np.where(s < 0.0, 0.0, s)
    return lx + rho_c * np.sqrt(integ) * B, s, ly
