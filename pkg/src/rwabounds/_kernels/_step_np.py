"""Pure-numpy fallback for the fixed-step RK4 kernel.

Same contract as the compiled twin in ``_step_cy``; selected at import time
by :mod:`rwabounds._kernels` when the extension is unavailable.
"""

import numpy as np

BACKEND = "numpy"


def rk4_lincomb(mats, coeffs, steps, y0, snap_after):
    """Integrate dY/dt = (sum_j c_j(t) M_j) Y with classical RK4.

    Parameters
    ----------
    mats : (m, n, n) complex ndarray
        Constant matrices M_j.
    coeffs : (3*S, m) complex ndarray
        Coefficient vectors at the stage times of each step i, rows
        (3i, 3i+1, 3i+2) holding c(t_i), c(t_i + h_i/2), c(t_i + h_i).
    steps : (S,) float ndarray
        Step sizes h_i.
    y0 : (n, k) complex ndarray
        Initial value.
    snap_after : (G,) int ndarray
        Sorted step counts after which to record Y; 0 records y0 itself.
        Duplicates are allowed and produce repeated snapshots.

    Returns
    -------
    (G, n, k) complex ndarray
    """
    y = np.array(y0, dtype=complex)
    num_steps = len(steps)
    out = np.empty((len(snap_after),) + y.shape, dtype=complex)
    g = 0
    while g < len(snap_after) and snap_after[g] == 0:
        out[g] = y
        g += 1
    for i in range(num_steps):
        h = steps[i]
        a1 = np.tensordot(coeffs[3 * i], mats, axes=1)
        a2 = np.tensordot(coeffs[3 * i + 1], mats, axes=1)
        a3 = np.tensordot(coeffs[3 * i + 2], mats, axes=1)
        k1 = a1 @ y
        k2 = a2 @ (y + (0.5 * h) * k1)
        k3 = a2 @ (y + (0.5 * h) * k2)
        k4 = a3 @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        while g < len(snap_after) and snap_after[g] == i + 1:
            out[g] = y
            g += 1
    if g != len(snap_after):
        raise ValueError("snap_after contains indices beyond the last step")
    return out
