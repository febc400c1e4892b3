"""Synthetic ground-truth light fields of textured fronto-parallel planes.

A plane at distance ``z`` carrying texture ``w`` produces
``l(x, y, u, v) = w(x*z + u, y*z + v)``. Texture coordinates are centred the
same way as light field coordinates: texel ``(i, j)`` of an ``H x W`` texture
sits at ``(j - (W-1)/2, i - (H-1)/2)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.special import ndtr

from .core import LightField, centered_coords, interp_matrix

__all__ = [
    "Plane",
    "PlaneScene",
    "make_texture",
    "tile_texture",
    "plane_lightfield",
    "multiplane_lightfield",
    "ray_texture_coords",
    "disk_alpha",
    "demo_scene",
]


def make_texture(kind, size, seed=0, *, period=2, smooth=0.0, path=None):
    """Deterministic grayscale texture in [0, 1].

    ``kind`` is ``"checker"`` (blocks of ``period`` texels), ``"blocks"``
    (square cells of ``period`` texels with random gray levels), ``"noise"``
    (uniform noise, optionally Gaussian-smoothed with periodic boundaries and
    mapped back to a uniform marginal) or ``"image-file"`` (``path`` is read,
    converted to gray and resized to ``size``).
    """
    h, w = (size, size) if np.isscalar(size) else tuple(size)
    if h < 1 or w < 1:
        raise ValueError("texture size must be >= 1")
    if kind == "checker":
        iy, ix = np.mgrid[0:h, 0:w]
        return (((iy // period) + (ix // period)) % 2).astype(np.float64)
    if kind == "blocks":
        rng = np.random.default_rng(seed)
        cells = rng.random((-(-h // period), -(-w // period)))
        return np.repeat(np.repeat(cells, period, 0), period, 1)[:h, :w]
    if kind == "noise":
        rng = np.random.default_rng(seed)
        tex = rng.random((h, w))
        if smooth > 0:
            tex = gaussian_filter(tex, smooth, mode="wrap")
            tex = ndtr((tex - tex.mean()) / max(tex.std(), 1e-12))
        return tex
    if kind == "image-file":
        if path is None:
            raise ValueError("image-file textures need a path")
        from PIL import Image

        with Image.open(path) as im:
            im = im.convert("F")
            im = im.resize((w, h), Image.BILINEAR)
            tex = np.asarray(im, dtype=np.float64)
        peak = 65535.0 if tex.max() > 255 else 255.0
        return np.clip(tex / peak, 0.0, 1.0)
    raise ValueError(f"unknown texture kind {kind!r}")


def tile_texture(tile, size):
    """Repeat ``tile`` to cover ``size``; the result is periodic in the tile shape.

    The tiling is anchored so the period is aligned with integer texture
    coordinates, whatever the parity of ``size``.
    """
    tile = np.asarray(tile, dtype=np.float64)
    h, w = (size, size) if np.isscalar(size) else tuple(size)
    th, tw = tile.shape[:2]
    iy = np.floor(centered_coords(h)).astype(int) % th
    ix = np.floor(centered_coords(w)).astype(int) % tw
    if h % 2 == 0 or w % 2 == 0:
        raise ValueError("tiled textures need odd sizes so texels sit on integer coordinates")
    return tile[iy[:, None], ix[None, :]]


@dataclass
class Plane:
    texture: np.ndarray
    depth: float
    alpha: np.ndarray = None


@dataclass
class PlaneScene:
    """Ordered planes, nearest first, over a constant background."""

    planes: list
    background: object = 0.0

    def __post_init__(self):
        if not self.planes:
            raise ValueError("a scene needs at least one plane")
        depths = [p.depth for p in self.planes]
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError("plane depths must be strictly increasing front to back")


def ray_texture_coords(z, dims):
    """Texture coordinates ``(s_x, s_y)`` hit by every ray for a plane at ``z``.

    Returns arrays of shape ``(nx, nu)`` and ``(ny, nv)``.
    """
    ny, nx, nv, nu = dims[:4]
    sx = centered_coords(nx)[:, None] * z + centered_coords(nu)[None, :]
    sy = centered_coords(ny)[:, None] * z + centered_coords(nv)[None, :]
    return sx, sy


def _sample_separable(img, z, dims):
    """Bilinear, clamped ``img(x*z + u, y*z + v)`` as (ny, nx, nv, nu, nc)."""
    ny, nx, nv, nu = dims[:4]
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    h, w, nc = img.shape
    sx, sy = ray_texture_coords(z, dims)
    wx = interp_matrix(sx + (w - 1) / 2.0, w).reshape(nx * nu, w)
    wy = interp_matrix(sy + (h - 1) / 2.0, h).reshape(ny * nv, h)
    out = np.einsum("ab,bcn,dc->adn", wy, img, wx, optimize=True)
    return out.reshape(ny, nv, nx, nu, nc).transpose(0, 2, 1, 3, 4)


def plane_lightfield(texture, z_prime, dims, as_lightfield=True):
    """Light field of one opaque textured plane at distance ``z_prime``."""
    out = _sample_separable(texture, z_prime, dims)
    return LightField(out) if as_lightfield else out


def multiplane_lightfield(scene, dims, as_lightfield=True):
    """Front-to-back "over" compositing of the scene's planes per ray."""
    nc = 1
    for p in scene.planes:
        if np.ndim(p.texture) == 3:
            nc = np.shape(p.texture)[2]
    bg = np.broadcast_to(np.asarray(scene.background, dtype=np.float64), (nc,))
    out = np.zeros(tuple(dims[:4]) + (nc,))
    transmit = np.ones(tuple(dims[:4]) + (1,))
    for p in scene.planes:
        color = _sample_separable(p.texture, p.depth, dims)
        if p.alpha is None:
            alpha = np.ones_like(transmit)
        else:
            alpha = np.clip(_sample_separable(p.alpha, p.depth, dims), 0.0, 1.0)
        out += transmit * alpha * color
        transmit = transmit * (1.0 - alpha)
    out += transmit * bg
    return LightField(out) if as_lightfield else out


def disk_alpha(size, radius, center=(0.0, 0.0), soft=0.0):
    """Alpha mask of a disk in centred texture coordinates."""
    h, w = (size, size) if np.isscalar(size) else tuple(size)
    yy = centered_coords(h)[:, None] - center[1]
    xx = centered_coords(w)[None, :] - center[0]
    r = np.hypot(xx, yy)
    if soft > 0:
        return np.clip((radius - r) / soft + 0.5, 0.0, 1.0)
    return (r <= radius).astype(np.float64)


def demo_scene(kind, dims, depths=None, seed=0, smooth=1.5):
    """Scenes used by tests, demos and the ``synth`` command.

    ``plane``: one noise-textured plane; ``two-plane``: a disk of random gray
    blocks in front of a coarser block background (piecewise constant, the
    regime the sparse gradient prior is built for); ``checker-scene``: a
    checker board disk in front of a noise background. With more than two
    depths the extra middle layers are offset block disks.
    """
    ny, nx, nv, nu = dims[:4]
    if kind == "plane":
        depths = depths or [1.0]
    else:
        depths = depths or [0.5, 1.0]
    zmax = max(abs(d) for d in depths)
    size = int(2 * np.ceil(max(nx, ny) * zmax / 2 + max(nu, nv) / 2 + 4)) + 1
    if kind == "plane":
        tex = make_texture("noise", size, seed, smooth=smooth)
        return plane_lightfield(tex, depths[0], dims)
    if kind == "two-plane":
        front = make_texture("blocks", size, seed, period=4)
        back = make_texture("blocks", size, seed + 1, period=6)
    elif kind == "checker-scene":
        front = 0.15 + 0.7 * make_texture("checker", size, period=4)
        back = make_texture("noise", size, seed + 1, smooth=smooth)
    else:
        raise ValueError(f"unknown scene kind {kind!r}")
    radius = 0.3 * min(nx, ny) * depths[0]
    planes = [Plane(front, depths[0], disk_alpha(size, radius))]
    # middle layers are offset disks so every layer stays visible
    for k, d in enumerate(depths[1:-1], start=1):
        tex = make_texture("blocks", size, seed + 1 + k, period=5)
        r = 0.25 * min(nx, ny) * d
        c = (0.3 * nx * d * (-1) ** k, -0.2 * ny * d)
        planes.append(Plane(tex, d, disk_alpha(size, r, center=c)))
    planes.append(Plane(back, depths[-1]))
    return multiplane_lightfield(PlaneScene(planes), dims)
