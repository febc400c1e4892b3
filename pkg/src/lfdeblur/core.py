"""Two-plane light field container, views, refocusing and the shared
bilinear interpolation helper.

Conventions used throughout the package:

* samples are stored as ``(y, x, v, u, channel)``;
* continuous coordinates are in sample units and centred on the grid, so
  ``index = coord + (n - 1) / 2``;
* ``x`` is the spatial intercept *relative* to ``u`` with plane separation 1,
  so a fronto-parallel plane of texture ``w`` at distance ``z`` has
  ``l(x, u) = w(x * z + u)``;
* all resampling is bilinear with clamp-to-edge boundaries unless a caller
  explicitly asks for periodic wrapping.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LightField",
    "as_array",
    "to_coord",
    "to_index",
    "centered_coords",
    "interp_matrix",
    "subaperture",
    "epipolar_slice",
    "full_aperture",
    "refocus",
    "slope_for_depth",
    "rmse",
]


@dataclass(frozen=True, eq=False)
class LightField:
    """Immutable 4D light field with trailing channel axis.

    ``data`` has shape ``(ny, nx, nv, nu, nc)`` with ``nc`` in {1, 3} and is
    stored as float32. A 4D array is promoted to a single channel.
    """

    data: np.ndarray
    spatial_pitch: float = 1.0
    angular_pitch: float = 1.0

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float32)
        if data.ndim == 4:
            data = data[..., None]
        if data.ndim != 5:
            raise ValueError(f"light field must be 4D or 5D, got shape {data.shape}")
        if min(data.shape) < 1:
            raise ValueError(f"light field dims must be >= 1, got {data.shape}")
        if data.shape[-1] not in (1, 3):
            raise ValueError(f"channel count must be 1 or 3, got {data.shape[-1]}")
        if not np.all(np.isfinite(data)):
            raise ValueError("light field contains NaN or Inf samples")
        if not (self.spatial_pitch > 0 and self.angular_pitch > 0):
            raise ValueError("pitches must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dims(self):
        return self.data.shape

    @property
    def shape(self):
        return self.data.shape

    ny = property(lambda self: self.data.shape[0])
    nx = property(lambda self: self.data.shape[1])
    nv = property(lambda self: self.data.shape[2])
    nu = property(lambda self: self.data.shape[3])
    nc = property(lambda self: self.data.shape[4])

    @property
    def plane_separation(self):
        return 1.0

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data
        return self.data.astype(dtype)

    def with_data(self, data):
        """New light field with the same pitches and different samples."""
        return LightField(data, self.spatial_pitch, self.angular_pitch)

    def __repr__(self):
        return (f"LightField(dims={self.dims}, spatial_pitch={self.spatial_pitch}, "
                f"angular_pitch={self.angular_pitch})")


def as_array(lf, dtype=np.float64):
    """Return samples as a 5D array; accepts LightField or 4D/5D arrays."""
    arr = np.asarray(lf.data if isinstance(lf, LightField) else lf, dtype=dtype)
    if arr.ndim == 4:
        arr = arr[..., None]
    if arr.ndim != 5:
        raise ValueError(f"expected a 4D or 5D light field, got shape {arr.shape}")
    return arr


def _wrap_like(template, arr):
    if isinstance(template, LightField):
        return template.with_data(arr)
    return arr


def to_coord(index, n):
    return np.asarray(index, dtype=np.float64) - (n - 1) / 2.0


def to_index(coord, n):
    return np.asarray(coord, dtype=np.float64) + (n - 1) / 2.0


def centered_coords(n):
    return to_coord(np.arange(n), n)


def interp_matrix(pos, n, boundary="clamp", derivative=False):
    """Bilinear resampling matrices for positions given in index units.

    ``pos`` has shape ``(..., m)``; the result has shape ``(..., m, n)`` and
    row ``j`` holds the weights that produce ``f(pos[j])`` from samples
    ``f[0..n-1]``. With ``derivative=True`` the rows hold ``d f(pos)/d pos``
    instead (zero where the position is clamped).
    """
    pos = np.asarray(pos, dtype=np.float64)
    out = np.zeros(pos.shape + (n,))
    if n == 1:
        if not derivative:
            out[..., 0] = 1.0
        return out
    if boundary == "clamp":
        inside = (pos > 0) & (pos < n - 1)
        p = np.clip(pos, 0, n - 1)
        i0 = np.minimum(np.floor(p).astype(np.intp), n - 2)
        i1 = i0 + 1
    elif boundary == "wrap":
        inside = np.ones(pos.shape, dtype=bool)
        p = np.mod(pos, n)
        i0 = np.floor(p).astype(np.intp) % n
        i1 = (i0 + 1) % n
    else:
        raise ValueError(f"unknown boundary mode {boundary!r}")
    frac = p - np.floor(p) if boundary == "wrap" else p - i0
    if derivative:
        w0 = np.where(inside, -1.0, 0.0)
        w1 = -w0
    else:
        w0 = 1.0 - frac
        w1 = frac
    # i0 != i1 for n >= 2, so the two writes never collide
    np.put_along_axis(out, i0[..., None], w0[..., None], axis=-1)
    np.put_along_axis(out, i1[..., None], w1[..., None], axis=-1)
    return out


def _check_index(name, idx, n):
    if not 0 <= idx < n:
        raise IndexError(f"{name} index {idx} out of range [0, {n})")


def subaperture(lf, u_idx, v_idx):
    """Pinhole view at angular sample (u_idx, v_idx); shape (ny, nx, nc)."""
    arr = np.asarray(lf.data if isinstance(lf, LightField) else as_array(lf, None))
    _check_index("u", u_idx, arr.shape[3])
    _check_index("v", v_idx, arr.shape[2])
    return arr[:, :, v_idx, u_idx, :]


def epipolar_slice(lf, fixed_y, fixed_v):
    """Epipolar image over (x, u) at fixed (y, v); shape (nx, nu, nc)."""
    arr = np.asarray(lf.data if isinstance(lf, LightField) else as_array(lf, None))
    _check_index("y", fixed_y, arr.shape[0])
    _check_index("v", fixed_v, arr.shape[2])
    return arr[fixed_y, :, fixed_v, :, :]


def full_aperture(lf):
    """Angular mean for every pixel; constant fields map to themselves."""
    return as_array(lf).mean(axis=(2, 3))


def slope_for_depth(depth):
    """Refocus slope that brings a plane at ``depth`` into focus."""
    return 1.0 / np.asarray(depth, dtype=np.float64)


def refocus(lf, slope):
    """Sheared integral projection over the aperture.

    ``image(y, x) = mean_{u,v} l(x - slope*u, y - slope*v, u, v)``, with the
    spatial coordinates resampled bilinearly (clamp-to-edge). A plane at
    distance ``z`` is brought into focus by ``slope = 1 / z`` and appears as
    ``w(z * x, z * y)``; ``slope = 0`` is the full-aperture image.
    """
    arr = as_array(lf)
    ny, nx, nv, nu, _ = arr.shape
    slope = float(slope)
    if not np.isfinite(slope):
        raise ValueError("refocus slope must be finite")
    reach = abs(slope) * max(nu - 1, nv - 1) / 2.0
    if reach > 4 * max(nx, ny):
        raise ValueError(f"slope {slope} shears samples beyond 4x the grid extent")
    if slope == 0.0:
        return full_aperture(arr)
    u = centered_coords(nu)
    v = centered_coords(nv)
    # sx[u, x_out, x_in], sy[v, y_out, y_in]
    sx = interp_matrix(np.arange(nx)[None, :] - slope * u[:, None], nx)
    sy = interp_matrix(np.arange(ny)[None, :] - slope * v[:, None], ny)
    tmp = np.einsum("udc,bcvuk->bdvk", sx, arr, optimize=True)
    # tmp already summed over u; finish with the y resampling per v
    out = np.einsum("vab,bdvk->adk", sy, tmp, optimize=True)
    return out / (nu * nv)


def rmse(a, b):
    a = np.asarray(a.data if isinstance(a, LightField) else a, dtype=np.float64)
    b = np.asarray(b.data if isinstance(b, LightField) else b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))
