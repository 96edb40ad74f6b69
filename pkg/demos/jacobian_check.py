"""
Jacobian of the normalized warp
===============================

Compares the analytic Jacobian with central differences on a smooth scene.
"""

import numpy as np
from lrt import geometry as geo

rng = np.random.default_rng(1)
yy, xx = np.mgrid[0:40, 0:40].astype(float)
scene = 3.0 + np.cos(0.21 * xx + 0.13 * yy) + 0.5 * np.sin(0.07 * xx - 0.3 * yy)

window = geo.Window(6, 6, 28, 28)
A_t, Z = geo.center_constraint(window)

# a small rotation plus shear; the window center stays fixed
tau = geo.rotation_params(np.deg2rad(3.0))
tau[1] += 0.013
J = geo.jacobian(scene, tau, window, Z)
print("Jacobian basis:", J.basis.shape, "(pixels x free parameters)")

# central differences of warp -> normalize along each free direction
h = 1e-5
for k in range(Z.shape[1]):
    up = geo.normalize(geo.warp(scene, tau + h * Z[:, k], window))[0].ravel()
    dn = geo.normalize(geo.warp(scene, tau - h * Z[:, k], window))[0].ravel()
    fd = (up - dn) / (2 * h)
    err = np.linalg.norm(J.basis[:, k] - fd) / np.linalg.norm(fd)
    print(f"column {k}: relative error {err:.2e}")

# the columns are tangent to the unit sphere the normalized window lives on
v = geo.normalize(geo.warp(scene, tau, window))[0].ravel()
print("max |<v, J_k>|:", np.abs(v @ J.basis).max())
