"""Differentiable light field motion blur along a 3D Bezier camera path.

For one exposure time sample the camera offset ``p = (px, py, pz)`` maps the
sharp light field to ``l(x, y, u + px - x*pz, v + py - y*pz)``. Only the
angular coordinates move, and the ``u`` offset depends on ``(x, u)`` alone
while the ``v`` offset depends on ``(y, v)`` alone, so each time sample is a
pair of small per-column resampling matrices. The blur averages those
transforms over ``T`` midpoint time samples.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .core import LightField, as_array, centered_coords, interp_matrix

__all__ = [
    "MotionPath",
    "ExposureConfig",
    "bernstein",
    "bezier_eval",
    "time_samples",
    "sample_path",
    "shear_shift",
    "blur",
    "blur_adjoint",
    "path_gradient",
]


@dataclass(frozen=True, eq=False)
class MotionPath:
    """Bezier camera translation path with ``n >= 2`` control points.

    ``px, py`` are in angular samples, ``pz`` in spatial samples per angular
    sample (the same units as a plane distance). The first control point is
    the gauge and must be the origin.
    """

    control_points: np.ndarray

    def __post_init__(self):
        cp = np.array(self.control_points, dtype=np.float64)
        if cp.ndim != 2 or cp.shape[1] != 3 or cp.shape[0] < 2:
            raise ValueError(f"control points must have shape (n>=2, 3), got {cp.shape}")
        if not np.all(np.isfinite(cp)):
            raise ValueError("control points must be finite")
        if np.any(cp[0] != 0):
            raise ValueError("first control point is pinned to the origin")
        cp.setflags(write=False)
        object.__setattr__(self, "control_points", cp)

    @property
    def n(self):
        return self.control_points.shape[0]

    @classmethod
    def zero(cls, n=3):
        return cls(np.zeros((n, 3)))

    @classmethod
    def linear(cls, end, n=2):
        """Straight path from the origin to ``end`` with evenly spaced controls."""
        end = np.asarray(end, dtype=np.float64)
        return cls(np.linspace(0.0, 1.0, n)[:, None] * end[None, :])

    def check_bounds(self, nu):
        """Warn when the path leaves the sanity box for an aperture of ``nu``."""
        cp = self.control_points
        if np.abs(cp[:, :2]).max() > nu or np.abs(cp[:, 2]).max() > 2:
            warnings.warn("motion path exceeds sanity bounds (|px|,|py| <= nu, |pz| <= 2)",
                          stacklevel=2)


@dataclass(frozen=True)
class ExposureConfig:
    num_time_samples: int = 32

    def __post_init__(self):
        if int(self.num_time_samples) < 1:
            raise ValueError("num_time_samples must be >= 1")


def bernstein(n, t):
    """Bernstein basis of degree ``n - 1``; returns shape ``(len(t), n)``."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    i = np.arange(n)
    return comb(n - 1, i) * t[:, None] ** i * (1 - t[:, None]) ** (n - 1 - i)


def bezier_eval(path, t):
    """Point on the path at time ``t`` in [0, 1]."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any((t_arr < 0) | (t_arr > 1)):
        raise ValueError("t must lie in [0, 1]")
    pts = bernstein(path.n, t_arr) @ path.control_points
    return pts[0] if t_arr.ndim == 0 else pts


def time_samples(cfg):
    T = int(cfg.num_time_samples)
    return (np.arange(T) + 0.5) / T


def sample_path(path, cfg):
    """Camera offsets at the midpoint time samples, shape ``(T, 3)``."""
    return bernstein(path.n, time_samples(cfg)) @ path.control_points


def _offset_positions(offsets, n_ang, n_sp, axis):
    """Angular index positions ``u + p - x*pz`` with shape ``(T, n_sp, n_ang)``."""
    spatial = centered_coords(n_sp)
    return (np.arange(n_ang)[None, None, :]
            + offsets[:, axis][:, None, None]
            - spatial[None, :, None] * offsets[:, 2][:, None, None])


def _operators(offsets, shape, boundary="clamp", derivative=False):
    ny, nx, nv, nu = shape[:4]
    pos_u = _offset_positions(offsets, nu, nx, 0)
    pos_v = _offset_positions(offsets, nv, ny, 1)
    mu = interp_matrix(pos_u, nu, boundary)
    mv = interp_matrix(pos_v, nv, boundary)
    if not derivative:
        return mu, mv
    du = interp_matrix(pos_u, nu, boundary, derivative=True)
    dv = interp_matrix(pos_v, nv, boundary, derivative=True)
    return mu, mv, du, dv


def _apply_u(arr, mu):
    """Resample along u: ``arr`` (ny,nx,nv,nu,nc), ``mu`` (T,nx,nu,nu).

    Returns ``(T, ny, nv, nx, nc, nu)``.
    """
    ny, nx, nv, nu, nc = arr.shape
    a = arr.transpose(1, 0, 2, 4, 3).reshape(nx, ny * nv * nc, nu)
    tmp = a[None] @ mu.transpose(0, 1, 3, 2)
    return tmp.reshape(-1, nx, ny, nv, nc, nu).transpose(0, 2, 3, 1, 4, 5)


def _apply_v(tmp, mv, weights):
    """Resample along v and take the weighted time sum; returns (ny,nx,nv,nu,nc)."""
    T, ny, nv, nx, nc, nu = tmp.shape
    full = (mv @ tmp.reshape(T, ny, nv, nx * nc * nu)) * weights[:, None, None, None]
    out = full.sum(axis=0)
    return out.reshape(ny, nv, nx, nc, nu).transpose(0, 2, 1, 4, 3)


def _unique_offsets(offsets):
    # identical time samples collapse to one transform with weight count/T;
    # this keeps the zero path an exact identity
    uniq, counts = np.unique(offsets, axis=0, return_counts=True)
    return uniq, counts / offsets.shape[0]


def _transform(arr, offsets, boundary="clamp"):
    offsets, weights = _unique_offsets(offsets)
    mu, mv = _operators(offsets, arr.shape, boundary)
    return _apply_v(_apply_u(arr, mu), mv, weights)


def _transform_adjoint(arr, offsets, boundary="clamp"):
    offsets, weights = _unique_offsets(offsets)
    mu, mv = _operators(offsets, arr.shape, boundary)
    return _apply_v(_apply_u(arr, mu.transpose(0, 1, 3, 2)),
                    mv.transpose(0, 1, 3, 2), weights)


def _finish(template, out):
    if isinstance(template, LightField):
        return template.with_data(out)
    return out


def shear_shift(lf, px=0.0, py=0.0, pz=0.0, boundary="clamp"):
    """Single-instant transform ``l(x, y, u + px - x*pz, v + py - y*pz)``."""
    offsets = np.array([[px, py, pz]], dtype=np.float64)
    return _finish(lf, _transform(as_array(lf), offsets, boundary))


def blur(lf, path, cfg=ExposureConfig()):
    """Motion-blurred light field: mean of the per-time-sample transforms."""
    return _finish(lf, _transform(as_array(lf), sample_path(path, cfg)))


def blur_adjoint(residual, path, cfg=ExposureConfig()):
    """Exact transpose of :func:`blur` at a fixed path (bilinear splatting)."""
    return _finish(residual, _transform_adjoint(as_array(residual), sample_path(path, cfg)))


def path_gradient(lf, path, residual, cfg=ExposureConfig()):
    """Gradient of ``<blur(lf, path), residual>`` w.r.t. the control points.

    Returns an ``(n, 3)`` array. The row of the pinned first control point is
    reported as computed; optimizers must ignore it.
    """
    arr = as_array(lf)
    res = as_array(residual)
    ny, nx, nv, nu, _ = arr.shape
    offsets = sample_path(path, cfg)
    T = offsets.shape[0]
    mu, mv, du, dv = _operators(offsets, arr.shape, derivative=True)

    r = res.transpose(0, 2, 1, 4, 3)[None]          # (1, ny, nv, nx, nc, nu)
    xs = centered_coords(nx)[None, None, None, :, None, None]
    ys = centered_coords(ny)[None, :, None, None, None, None]

    def per_time(tmp, m):
        # tmp (T, ny, nv, nx, nc, nu) resampled in u; finish v without the time sum
        T_, ny_, nv_, nx_, nc_, nu_ = tmp.shape
        full = m @ tmp.reshape(T_, ny_, nv_, nx_ * nc_ * nu_)
        return full.reshape(tmp.shape)

    a = per_time(_apply_u(arr, du), mv) * r        # d/d(u offset)
    b = per_time(_apply_u(arr, mu), dv) * r        # d/d(v offset)
    g = np.empty((T, 3))
    g[:, 0] = a.sum(axis=(1, 2, 3, 4, 5))
    g[:, 1] = b.sum(axis=(1, 2, 3, 4, 5))
    g[:, 2] = -(a * xs).sum(axis=(1, 2, 3, 4, 5)) - (b * ys).sum(axis=(1, 2, 3, 4, 5))
    g /= T
    return bernstein(path.n, time_samples(cfg)).T @ g
