"""Synthetic low-rank textures with known deformation and corruption."""
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import lsqr

from . import geometry as geo

KINDS = ("stripes", "checkerboard", "low_rank_product", "grid_lines")
_FIXED_RANK = {"stripes": 1, "checkerboard": 2, "grid_lines": 2}


@dataclass(frozen=True)
class TextureSpec:
    kind: str
    m: int
    n: int
    rank_target: int = None
    seed: int = 0
    period: int = 8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown texture kind {self.kind!r}")
        if self.m < 2 or self.n < 2:
            raise ValueError("texture must be at least 2x2")
        rank = self.rank
        if not 1 <= rank <= min(self.m, self.n):
            raise ValueError(f"rank {rank} infeasible for a {self.m}x{self.n} texture")
        fixed = _FIXED_RANK.get(self.kind)
        if fixed is not None and self.rank_target not in (None, fixed):
            raise ValueError(f"{self.kind} textures have rank {fixed}, "
                             f"not {self.rank_target}")

    @property
    def rank(self):
        if self.rank_target is None:
            return _FIXED_RANK.get(self.kind, 3)
        return self.rank_target


@dataclass(frozen=True)
class CorruptionSpec:
    fraction: float = 0.0
    amplitude: tuple = (0.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.fraction < 1:
            raise ValueError("corruption fraction must lie in [0, 1)")


@dataclass
class GroundTruth:
    angle: float
    mask: np.ndarray
    window: geo.Window

    @property
    def tau(self):
        """Transform that undoes the deformation."""
        return geo.rotation_params(-self.angle)


def _square_wave(k, period, phase):
    return np.where(((k + phase) // (period // 2)) % 2 == 0, 1.0, -1.0)


def gen_texture(spec):
    """Deterministic texture of exact numerical rank ``spec.rank``.

    The image is ``spec.n`` rows by ``spec.m`` columns with values in [0, 1].
    """
    rng = np.random.default_rng(spec.seed)
    rows, cols = np.arange(spec.n), np.arange(spec.m)
    p = max(2, spec.period)
    if spec.kind == "stripes":
        phase = rng.integers(p)
        v = 0.5 + 0.4 * _square_wave(cols, p, phase)
        return np.outer(np.ones(spec.n), v)
    if spec.kind == "checkerboard":
        a = _square_wave(rows, p, rng.integers(p))
        b = _square_wave(cols, p, rng.integers(p))
        return 0.5 + 0.4 * np.outer(a, b)
    if spec.kind == "grid_lines":
        r = ((rows + rng.integers(p)) % p < 2).astype(float)
        c = ((cols + rng.integers(p)) % p < 2).astype(float)
        # on a line in either direction -> 1, elsewhere 0.2
        return 0.2 + 0.8 * (1 - np.outer(1 - r, 1 - c))
    # low_rank_product
    A = rng.random((spec.n, spec.rank))
    B = rng.random((spec.m, spec.rank))
    T = A @ B.T
    return T / T.max()


def rotate_about_center(img, angle):
    """Rotate an image by ``angle`` about its center, bilinear, edge-clamped.

    The content at window-centered coordinate ``u`` of ``img`` appears at
    ``R(-angle) u`` of the result, so ``rotation_params(-angle)`` undoes it.
    """
    img = np.asarray(img, dtype=float)
    H, W = img.shape
    win = geo.Window(0, 0, W, H)
    xs, ys = geo.sample_points(geo.rotation_params(angle), win)
    xs = np.clip(xs, 0, W - 1)
    ys = np.clip(ys, 0, H - 1)
    return geo.bilinear_sample(img, xs, ys)


def required_margin(m, n, angle, pad=2):
    """Border needed so the rotated m x n window stays one pixel inside."""
    c, s = abs(np.cos(angle)), abs(np.sin(angle))
    half_w = 0.5 * ((m - 1) * c + (n - 1) * s)
    half_h = 0.5 * ((m - 1) * s + (n - 1) * c)
    return int(np.ceil(max(half_w - (m - 1) / 2, half_h - (n - 1) / 2))) + pad


def interpolation_matrix(xs, ys, shape):
    """Sparse matrix ``B`` with ``B @ img.ravel() == bilinear_sample(img, xs, ys)``."""
    H, W = shape
    x = np.clip(np.ravel(xs), 0.0, W - 1)
    y = np.clip(np.ravel(ys), 0.0, H - 1)
    x0 = np.minimum(np.floor(x).astype(int), W - 2)
    y0 = np.minimum(np.floor(y).astype(int), H - 2)
    fx, fy = x - x0, y - y0
    rows = np.repeat(np.arange(x.size), 4)
    cols = np.stack([y0 * W + x0, y0 * W + x0 + 1,
                     (y0 + 1) * W + x0, (y0 + 1) * W + x0 + 1], axis=1).ravel()
    vals = np.stack([(1 - fx) * (1 - fy), fx * (1 - fy),
                     (1 - fx) * fy, fx * fy], axis=1).ravel()
    return sparse.csr_matrix((vals, (rows, cols)), shape=(x.size, H * W))


def deform_and_corrupt(texture, angle, corruption, margin):
    """Rotate a texture, corrupt it, and return the scene with ground truth.

    ``texture`` covers the whole canvas; the window of interest is the central
    region leaving ``margin`` pixels on every side.  The scene is the
    bilinearly rotated texture plus the smallest correction for which warping
    it back with the true transform reproduces the window *exactly*: the
    central texture crop with ``round(fraction * m * n)`` entries replaced by
    uniform values from ``corruption.amplitude``.  Without the correction the
    double interpolation leaves a dense residual that masks the true rank.

    Returns ``(scene, GroundTruth)``; the mask is in window coordinates.
    """
    texture = np.asarray(texture, dtype=float)
    H, W = texture.shape
    n, m = H - 2 * margin, W - 2 * margin
    if m < 2 or n < 2:
        raise ValueError(f"margin {margin} leaves no window in a {W}x{H} texture")
    need = required_margin(m, n, angle)
    if margin < need:
        raise ValueError(f"margin {margin} too small for a {np.rad2deg(angle):.1f} "
                         f"degree rotation of a {m}x{n} window (need {need})")
    window = geo.Window(margin, margin, m, n)

    rng = np.random.default_rng(corruption.seed)
    count = int(round(corruption.fraction * m * n))
    idx = np.sort(rng.choice(m * n, size=count, replace=False))
    lo, hi = corruption.amplitude
    target = texture[margin:margin + n, margin:margin + m].copy()
    target.flat[idx] = rng.uniform(lo, hi, size=count)
    mask = np.zeros((n, m), dtype=bool)
    mask.flat[idx] = True

    scene = texture.copy() if angle == 0 else rotate_about_center(texture, angle)
    xs, ys = geo.sample_points(geo.rotation_params(-angle), window)
    B = interpolation_matrix(xs, ys, scene.shape)
    gap = target.ravel() - B @ scene.ravel()
    if np.any(gap):
        corr = lsqr(B, gap, atol=1e-15, btol=1e-15, iter_lim=50 * m * n)[0]
        scene = scene + corr.reshape(scene.shape)
    err = np.max(np.abs(geo.warp(scene, geo.rotation_params(-angle), window) - target))
    if err > 1e-9:
        raise RuntimeError(f"could not match the target window (max error {err:.2e})")
    return scene, GroundTruth(angle=angle, mask=mask, window=window)
