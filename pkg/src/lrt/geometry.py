"""Affine warps of image windows and the Jacobian of the normalized warp.

Conventions
-----------
Images are 2-D float arrays indexed ``img[y, x]`` with pixel centers on the
integer grid.  A window is described by the scene coordinates of its top-left
pixel and its size.  Transform parameters are a 6-vector
``p = (da11, da12, da21, da22, dt1, dt2)`` describing the map

    u  ->  (I + dA) u + dt + c

where ``u`` is a window-centered pixel coordinate ``(x, y)`` and ``c`` is the
window center in the scene.  ``p = 0`` is the identity.  Because ``u = 0`` at
the center, pinning the center amounts to ``dt = 0``.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

CLAMP_MARGIN = 0.5
N_PARAMS = 6


class OutOfBoundsError(ValueError):
    """The transformed window leaves the scene."""


class DegenerateInputError(ValueError):
    """Rectification is undefined for this window (e.g. all zeros)."""


class DegenerateJacobianError(ValueError):
    """The normalized-warp Jacobian vanishes."""


@dataclass(frozen=True)
class Window:
    x: float
    y: float
    width: int
    height: int

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValueError(
                f"window must be at least 2x2, got {self.width}x{self.height}")

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def center(self):
        return (self.x + (self.width - 1) / 2.0,
                self.y + (self.height - 1) / 2.0)

    def canonical_grid(self):
        """Window-centered coordinates ``(ux, uy)``, each of shape (h, w)."""
        ux = np.arange(self.width) - (self.width - 1) / 2.0
        uy = np.arange(self.height) - (self.height - 1) / 2.0
        return np.meshgrid(ux, uy)


def identity_params():
    return np.zeros(N_PARAMS)


def as_params(tau):
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (N_PARAMS,):
        raise ValueError(f"affine parameters must have shape (6,), got {tau.shape}")
    return tau


def affine_parts(tau):
    """Return the 2x2 linear part ``I + dA`` and the offset ``dt``."""
    tau = as_params(tau)
    A = np.eye(2) + tau[:4].reshape(2, 2)
    return A, tau[4:].copy()


def rotation_params(theta):
    """Pure rotation by ``theta`` radians about the window center."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([c - 1.0, -s, s, c - 1.0, 0.0, 0.0])


def rotation_angle(tau):
    """Rotation angle of the orthogonal polar factor of ``I + dA``."""
    A, _ = affine_parts(tau)
    U, _, Vt = np.linalg.svd(A)
    R = U @ Vt
    return float(np.arctan2(R[1, 0], R[0, 0]))


def sample_points(tau, window):
    """Scene coordinates hit by each window pixel under ``tau``."""
    A, t = affine_parts(tau)
    ux, uy = window.canonical_grid()
    cx, cy = window.center
    xs = A[0, 0] * ux + A[0, 1] * uy + t[0] + cx
    ys = A[1, 0] * ux + A[1, 1] * uy + t[1] + cy
    return xs, ys


_CORNERS = {"top-left": (0, 0), "top-right": (0, -1),
            "bottom-left": (-1, 0), "bottom-right": (-1, -1)}


def _check_inside(xs, ys, scene_shape, margin):
    """Raise if a window corner falls outside ``[lo, hi]`` on either axis.

    The sample grid is an affine image of a rectangle, so its extreme points
    are the corners.
    """
    H, W = scene_shape
    for name, (i, j) in _CORNERS.items():
        x, y = xs[i, j], ys[i, j]
        if not (-margin <= x <= W - 1 + margin and -margin <= y <= H - 1 + margin):
            raise OutOfBoundsError(
                f"{name} corner of the window maps to (x={x:.3f}, y={y:.3f}), "
                f"outside the {W}x{H} scene")


def bilinear_sample(scene, xs, ys):
    """Bilinear interpolation of ``scene`` at ``(xs, ys)``.

    Coordinates may exceed the pixel grid by up to half a pixel; those are
    clamped to the border.  Anything further out is an error.
    """
    scene = np.asarray(scene, dtype=float)
    H, W = scene.shape
    if H < 2 or W < 2:
        raise ValueError("scene must be at least 2x2")
    _check_inside(xs, ys, scene.shape, CLAMP_MARGIN)
    x = np.clip(xs, 0.0, W - 1)
    y = np.clip(ys, 0.0, H - 1)
    x0 = np.minimum(np.floor(x).astype(int), W - 2)
    y0 = np.minimum(np.floor(y).astype(int), H - 2)
    fx = x - x0
    fy = y - y0
    top = scene[y0, x0] * (1 - fx) + scene[y0, x0 + 1] * fx
    bot = scene[y0 + 1, x0] * (1 - fx) + scene[y0 + 1, x0 + 1] * fx
    return top * (1 - fy) + bot * fy


def warp(scene, tau, window):
    """Sample the window of ``scene`` seen through the transform ``tau``."""
    xs, ys = sample_points(tau, window)
    return bilinear_sample(scene, xs, ys)


def normalize(img):
    """Scale to unit Frobenius norm; returns ``(scaled, original_norm)``."""
    img = np.asarray(img, dtype=float)
    nrm = float(np.linalg.norm(img))
    if not nrm > 0:
        raise DegenerateInputError("window is identically zero; cannot normalize")
    return img / nrm, nrm


def center_constraint(window=None):
    """Center-pinning constraint ``A_t`` and an orthonormal basis of its null space.

    With window-centered coordinates the center moves exactly by ``dt``, so
    ``A_t`` selects the translation entries and the null space is spanned by
    the four linear-part entries.  ``window`` is accepted for API symmetry.
    """
    A_t = np.zeros((2, N_PARAMS))
    A_t[0, 4] = A_t[1, 5] = 1.0
    Z = np.eye(N_PARAMS)[:, :4]
    return A_t, Z


def _axis_slopes(scene, x0, y0, fx, fy, axis):
    """Derivative of the bilinear interpolant along ``axis`` (1 = x, 0 = y).

    On a grid line the interpolant has a kink; there the mean of the two
    one-sided slopes (a central difference) is returned, which is what a
    symmetric perturbation of the sample point sees.
    """
    if axis == 1:
        f_along, f_across = fx, fy

        def val(across, along):
            return scene[y0 + across, x0 + along]
    else:
        f_along, f_across = fy, fx

        def val(across, along):
            return scene[y0 + along, x0 + across]

    on_line = f_along == 0
    slopes = []
    for k in (0, 1):
        fwd = val(k, 1) - val(k, 0)
        ctr = 0.5 * (val(k, 1) - val(k, -1))
        slopes.append(np.where(on_line, ctr, fwd))
    return slopes[0] * (1 - f_across) + slopes[1] * f_across


def image_gradient(scene, xs, ys):
    """Spatial gradient ``(gx, gy)`` of the interpolated scene at the samples.

    Requires every sample to lie at least one pixel inside the scene.
    """
    scene = np.asarray(scene, dtype=float)
    H, W = scene.shape
    if xs.min() < 1 or ys.min() < 1 or xs.max() > W - 2 or ys.max() > H - 2:
        raise OutOfBoundsError(
            "Jacobian needs a one-pixel interior margin around the warped window")
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    fx = xs - x0
    fy = ys - y0
    gx = _axis_slopes(scene, x0, y0, fx, fy, axis=1)
    gy = _axis_slopes(scene, x0, y0, fx, fy, axis=0)
    return gx, gy


def raw_jacobian(scene, tau, window):
    """Derivative of the unnormalized warp w.r.t. the six parameters.

    Shape ``(h*w, 6)``; rows follow the C-order ravel of the window.
    """
    xs, ys = sample_points(tau, window)
    gx, gy = image_gradient(scene, xs, ys)
    ux, uy = window.canonical_grid()
    cols = [gx * ux, gx * uy, gy * ux, gy * uy, gx, gy]
    return np.stack([c.ravel() for c in cols], axis=1)


class JacobianOperator:
    """Linear map from reduced parameters to window-sized matrices.

    Wraps the dense ``(h*w, q)`` matrix ``J = J_full @ Z`` together with a
    Cholesky factorization of ``J.T @ J``.
    """

    def __init__(self, basis, shape, null_basis=None):
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != shape[0] * shape[1]:
            raise ValueError(f"basis of shape {basis.shape} does not fit window {shape}")
        self.basis = basis
        self.shape = tuple(shape)
        self.null_basis = (np.eye(basis.shape[1]) if null_basis is None
                           else np.asarray(null_basis, dtype=float))
        gram = basis.T @ basis
        self.ridge = 0.0
        try:
            self.gram_factor = cho_factor(gram)
        except LinAlgError:
            self.ridge = 1e-12 * np.trace(gram) / gram.shape[0]
            self.gram_factor = cho_factor(gram + self.ridge * np.eye(gram.shape[0]))
        self.gram = gram

    @property
    def q(self):
        return self.basis.shape[1]

    def apply(self, beta):
        return (self.basis @ beta).reshape(self.shape)

    def adjoint(self, M):
        return self.basis.T @ np.asarray(M).ravel()

    def gram_solve(self, r):
        return cho_solve(self.gram_factor, r)

    def project(self, M):
        """Orthogonal projection onto range(J): ``J (J*J)^-1 J* M``."""
        return self.apply(self.gram_solve(self.adjoint(M)))

    def full_increment(self, beta):
        """Map a reduced increment back to the 6 affine parameters."""
        return self.null_basis @ beta


def jacobian(scene, tau, window, null_basis=None):
    """Jacobian of ``vec(warp) / ||vec(warp)||`` restricted to ``span(Z)``.

    Built analytically: interpolant gradients times the affine coordinate
    derivatives, followed by the quotient rule of the normalization.
    """
    if null_basis is None:
        _, null_basis = center_constraint(window)
    v = warp(scene, tau, window).ravel()
    nv = np.linalg.norm(v)
    if not nv > 0:
        raise DegenerateInputError("window is identically zero; cannot normalize")
    dv = raw_jacobian(scene, tau, window) @ null_basis
    unit = v / nv
    J = (dv - np.outer(unit, unit @ dv)) / nv
    if np.linalg.norm(J) < 1e-10:
        raise DegenerateJacobianError(
            "Jacobian of the normalized warp is numerically zero "
            "(window is constant or has no usable gradient)")
    op = JacobianOperator(J, window.shape, null_basis)
    resid = unit - op.project(unit.reshape(window.shape)).ravel()
    if np.linalg.norm(resid) < 1e-8:
        warnings.warn("warped window lies in the range of the Jacobian; "
                      "the linearized problem only admits the zero solution",
                      RuntimeWarning, stacklevel=2)
    return op
