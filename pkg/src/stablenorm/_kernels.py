"""Fused primal-dual sweeps for isotropic weights (numba).

Each call runs ``iters`` iterations in place on ``v``, ``v_bar`` and ``z``;
they match the numpy update in :mod:`stablenorm.cell_solver` step for step.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def cp_iso_2d(v, v_bar, z, a, p, g, tau, sigma, theta, inv_h, iters):
    n0, n1 = v.shape
    p0, p1 = p[0], p[1]
    for _ in range(iters):
        for i in range(n0):
            ip = i + 1 if i + 1 < n0 else 0
            for j in range(n1):
                jp = j + 1 if j + 1 < n1 else 0
                vb = v_bar[i, j]
                y0 = z[0, i, j] + sigma * ((v_bar[ip, j] - vb) * inv_h + p0)
                y1 = z[1, i, j] + sigma * ((v_bar[i, jp] - vb) * inv_h + p1)
                nrm = np.sqrt(y0 * y0 + y1 * y1)
                if nrm > a[i, j]:
                    s = a[i, j] / nrm
                    y0 *= s
                    y1 *= s
                z[0, i, j] = y0
                z[1, i, j] = y1
        for i in range(n0):
            im = i - 1 if i > 0 else n0 - 1
            for j in range(n1):
                jm = j - 1 if j > 0 else n1 - 1
                div = (z[0, i, j] - z[0, im, j]) * inv_h + (z[1, i, j] - z[1, i, jm]) * inv_h
                vn = v[i, j] + tau * (div - g[i, j])
                v_bar[i, j] = vn + theta * (vn - v[i, j])
                v[i, j] = vn


@njit(cache=True)
def cp_iso_3d(v, v_bar, z, a, p, g, tau, sigma, theta, inv_h, iters):
    n0, n1, n2 = v.shape
    p0, p1, p2 = p[0], p[1], p[2]
    for _ in range(iters):
        for i in range(n0):
            ip = i + 1 if i + 1 < n0 else 0
            for j in range(n1):
                jp = j + 1 if j + 1 < n1 else 0
                for k in range(n2):
                    kp = k + 1 if k + 1 < n2 else 0
                    vb = v_bar[i, j, k]
                    y0 = z[0, i, j, k] + sigma * ((v_bar[ip, j, k] - vb) * inv_h + p0)
                    y1 = z[1, i, j, k] + sigma * ((v_bar[i, jp, k] - vb) * inv_h + p1)
                    y2 = z[2, i, j, k] + sigma * ((v_bar[i, j, kp] - vb) * inv_h + p2)
                    nrm = np.sqrt(y0 * y0 + y1 * y1 + y2 * y2)
                    if nrm > a[i, j, k]:
                        s = a[i, j, k] / nrm
                        y0 *= s
                        y1 *= s
                        y2 *= s
                    z[0, i, j, k] = y0
                    z[1, i, j, k] = y1
                    z[2, i, j, k] = y2
        for i in range(n0):
            im = i - 1 if i > 0 else n0 - 1
            for j in range(n1):
                jm = j - 1 if j > 0 else n1 - 1
                for k in range(n2):
                    km = k - 1 if k > 0 else n2 - 1
                    div = ((z[0, i, j, k] - z[0, im, j, k]) + (z[1, i, j, k] - z[1, i, jm, k])
                           + (z[2, i, j, k] - z[2, i, j, km])) * inv_h
                    vn = v[i, j, k] + tau * (div - g[i, j, k])
                    v_bar[i, j, k] = vn + theta * (vn - v[i, j, k])
                    v[i, j, k] = vn
