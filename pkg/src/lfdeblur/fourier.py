"""Fourier-domain tools: unitary 4D FFTs, in-plane blur kernels and Wiener
deconvolution, the affine-theorem prediction for shears, Fourier slices by
sheared projection, and blind texture recovery for out-of-plane motion of a
single textured plane.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .core import LightField, as_array, centered_coords, interp_matrix, refocus, to_index
from .forward import ExposureConfig, sample_path

__all__ = [
    "BlurKernel",
    "TextureRecovery",
    "fft4d",
    "ifft4d",
    "affine_spectrum",
    "rasterize_kernel",
    "convolve_kernel",
    "deconvolve_inplane",
    "projected_kernel_2d",
    "deconvolve_view_2d",
    "extract_fourier_slice",
    "slope_time_histogram",
    "angular_spread",
    "recover_texture",
]

AXES4 = (0, 1, 2, 3)


def fft4d(lf):
    """Unitary DFT over (y, x, v, u) for every channel."""
    return np.fft.fftn(as_array(lf), axes=AXES4, norm="ortho")


def ifft4d(spectrum, real=True):
    out = np.fft.ifftn(spectrum, axes=AXES4, norm="ortho")
    return out.real if real else out


def affine_spectrum(spectrum, shear, shift=(0.0, 0.0), dims=None):
    """Spectrum of ``l(x, y, u + px - x*s, v + py - y*s)`` predicted from that of ``l``.

    Applies the affine theorem on the periodic sample grid: with
    ``M = [[1, 0], [-s, 1]]`` per (x, u) pair the spectrum is re-indexed as
    ``L(kx + s*kx_of_u, ku)`` and multiplied by the shift phase. The re-indexing
    is exact only when ``s * nx / nu`` is an integer, which is checked.
    ``spectrum`` must come from :func:`fft4d` on centred coordinates being
    periodic, i.e. the transform is taken over sample indices.
    """
    spectrum = np.asarray(spectrum)
    ny, nx, nv, nu = spectrum.shape[:4]
    s = float(shear)
    step_x = s * nx / nu
    step_y = s * ny / nv
    if abs(step_x - round(step_x)) > 1e-9 or abs(step_y - round(step_y)) > 1e-9:
        raise ValueError("shear must map the frequency grid onto itself (s*nx/nu integer)")
    step_x, step_y = int(round(step_x)), int(round(step_y))
    ky = np.arange(ny)[:, None, None, None]
    kx = np.arange(nx)[None, :, None, None]
    kv = np.arange(nv)[None, None, :, None]
    ku = np.arange(nu)[None, None, None, :]
    # transform over indices: x index = x + cx, the centring adds a phase
    cx, cy = (nx - 1) / 2.0, (ny - 1) / 2.0
    src = spectrum[(ky + step_y * kv) % ny, (kx + step_x * ku) % nx, kv, ku]
    phase = (2j * np.pi) * (ku * (shift[0] + s * cx) / nu + kv * (shift[1] + s * cy) / nv)
    return src * np.exp(phase)[..., None]


@dataclass(frozen=True, eq=False)
class BlurKernel:
    """Angular blur kernel ``k(v, u)``; index ``(nv//2, nu//2)`` is zero offset."""

    k: np.ndarray

    def __post_init__(self):
        k = np.array(self.k, dtype=np.float64)
        if k.ndim != 2:
            raise ValueError("kernel must be 2D over (v, u)")
        if np.any(k < -1e-12) or abs(k.sum() - 1.0) > 1e-6:
            raise ValueError("kernel must be nonnegative with unit mass")
        k.setflags(write=False)
        object.__setattr__(self, "k", k)

    @property
    def shape(self):
        return self.k.shape

    def spectrum(self):
        """Kernel DFT with the zero offset moved to index (0, 0)."""
        return np.fft.fft2(np.fft.ifftshift(self.k))


@dataclass
class TextureRecovery:
    """Blindly recovered plane texture and per-depth exposure weights."""

    texture: np.ndarray
    weights: np.ndarray
    zeta: float
    depths: np.ndarray
    depth: float
    uniform: bool = False


def rasterize_kernel(path, cfg=ExposureConfig(), angular_dims=None):
    """Splat the in-plane path into the angular plane.

    Each time sample deposits ``1/T`` bilinearly at offset ``(-py, -px)``
    from the centre, so that periodic convolution with the kernel reproduces
    :func:`~lfdeblur.forward.blur`. Offsets that leave the kernel wrap around.
    """
    nv, nu = angular_dims
    offsets = sample_path(path, cfg)
    if np.any(offsets[:, 2] != 0):
        raise ValueError("kernel undefined for out-of-plane motion")
    T = offsets.shape[0]
    wu = interp_matrix(nu // 2 - offsets[:, 0][:, None], nu, boundary="wrap")[:, 0, :]
    wv = interp_matrix(nv // 2 - offsets[:, 1][:, None], nv, boundary="wrap")[:, 0, :]
    k = np.einsum("tv,tu->vu", wv, wu) / T
    return BlurKernel(k)


def convolve_kernel(lf, kernel):
    """Periodic convolution of every (y, x) angular slice with ``kernel``."""
    arr = as_array(lf)
    K = kernel.spectrum()[None, None, :, :, None]
    out = np.fft.ifft2(np.fft.fft2(arr, axes=(2, 3)) * K, axes=(2, 3)).real
    return lf.with_data(out) if isinstance(lf, LightField) else out


def deconvolve_inplane(blurred, kernel, wiener_eps=1e-3):
    """4D Wiener deconvolution by an angular kernel.

    The kernel is a spatial delta, so the 4D spectrum is divided by ``K`` along
    the angular frequencies only; spatial frequencies pass unchanged.
    """
    if wiener_eps <= 0:
        raise ValueError("wiener_eps must be positive")
    arr = as_array(blurred)
    if kernel.shape != arr.shape[2:4]:
        raise ValueError(f"kernel shape {kernel.shape} does not match angular dims {arr.shape[2:4]}")
    K = kernel.spectrum()
    H = (np.conj(K) / (np.abs(K) ** 2 + wiener_eps))[None, None, :, :, None]
    out = ifft4d(fft4d(arr) * H)
    return blurred.with_data(out) if isinstance(blurred, LightField) else out


def projected_kernel_2d(path, cfg, shape, depth):
    """Spatial kernel seen by one view of a plane at ``depth`` under in-plane motion.

    An angular offset ``p`` moves the view of a plane at distance ``z`` by
    ``p / z`` pixels, so the splat positions are ``-p / z`` around the centre
    ``(ny//2, nx//2)``.
    """
    ny, nx = shape
    offsets = sample_path(path, cfg)
    if np.any(offsets[:, 2] != 0):
        raise ValueError("kernel undefined for out-of-plane motion")
    T = offsets.shape[0]
    wx = interp_matrix(nx // 2 - offsets[:, 0][:, None] / depth, nx, boundary="wrap")[:, 0, :]
    wy = interp_matrix(ny // 2 - offsets[:, 1][:, None] / depth, ny, boundary="wrap")[:, 0, :]
    return np.einsum("ty,tx->yx", wy, wx) / T


def deconvolve_view_2d(image, kernel2d, wiener_eps=1e-3):
    """Conventional 2D Wiener deconvolution of an (ny, nx[, nc]) image."""
    img = np.asarray(image, dtype=np.float64)
    K = np.fft.fft2(np.fft.ifftshift(kernel2d))
    H = np.conj(K) / (np.abs(K) ** 2 + wiener_eps)
    if img.ndim == 3:
        H = H[..., None]
    return np.fft.ifft2(np.fft.fft2(img, axes=(0, 1)) * H, axes=(0, 1)).real


def extract_fourier_slice(lf, slope):
    """2D slice of the 4D spectrum, computed as the spectrum of a refocused image."""
    return np.fft.fft2(refocus(lf, slope), axes=(0, 1), norm="ortho")


def slope_time_histogram(path, cfg, slopes, z_prime):
    """Fraction of exposure time whose in-focus slope falls nearest each grid slope.

    The plane at ``z_prime`` is seen at distance ``z_prime - pz(t)``, which is
    in focus at slope ``1 / (z_prime - pz(t))``. ``slopes`` must be increasing;
    time spent more than half a grid step outside the grid is not counted.
    """
    slopes = np.asarray(slopes, dtype=np.float64)
    z = z_prime - sample_path(path, cfg)[:, 2]
    with np.errstate(divide="ignore"):
        q = 1.0 / z
    if slopes.size == 1:
        return np.ones(1)
    mid = (slopes[1:] + slopes[:-1]) / 2
    edges = np.concatenate([[slopes[0] - (mid[0] - slopes[0])], mid,
                            [slopes[-1] + (slopes[-1] - mid[-1])]])
    counts, _ = np.histogram(q[np.isfinite(q)], bins=edges)
    return counts / z.size



def angular_spread(lf, slope, border=0.125):
    """Mean variance across views of the light field sheared by ``slope``.

    Rays from a plane in focus at ``slope`` agree across the aperture, so the
    spread is smallest there. A ``border`` fraction of pixels on every side
    is ignored, where edge clamping breaks the agreement.
    """
    arr = as_array(lf)
    ny, nx, nv, nu, _ = arr.shape
    sx = interp_matrix(np.arange(nx)[None, :] - slope * centered_coords(nu)[:, None], nx)
    sy = interp_matrix(np.arange(ny)[None, :] - slope * centered_coords(nv)[:, None], ny)
    # resample x per u, then y per v: stack[v, u, k, y, x]
    t = arr.transpose(3, 2, 4, 0, 1) @ sx.transpose(0, 2, 1)[:, None, None]
    stack = sy[None, :, None] @ t
    by, bx = int(ny * border), int(nx * border)
    spread = stack.var(axis=(0, 1)).transpose(1, 2, 0)
    return float(spread[by:ny - by, bx:nx - bx].mean())


def _slice_magnitudes(images, ref, percentile=70.0):
    """Per-slope magnitude ratio against the reference slice.

    Only frequencies where the reference modulus is above ``percentile`` are
    compared, which keeps near-zero reference values out of the ratios.
    """
    mags = [np.abs(np.fft.fft2(img)) for img in images]
    for m in mags:
        m[0, 0] = 0.0
    mask = mags[ref] > np.percentile(mags[ref], percentile)
    if not mask.any():
        return np.ones(len(images))
    denom = mags[ref][mask].mean()
    if not denom > 0:
        return np.ones(len(images))
    return np.array([m[mask].mean() for m in mags]) / denom


def _profile_width(ratios, slopes):
    # width in slope units of a profile whose peak is 1
    if slopes.size == 1:
        return 0.0
    return float(np.sum(ratios * np.gradient(slopes)))


def recover_texture(blurred, slope_grid, correction="separable", percentile=70.0):
    """Blind texture of a single plane blurred by out-of-plane motion.

    Refocused images (Fourier slices) are taken at every slope of
    ``slope_grid``. The reference slice is the one whose slope best aligns
    rays across the aperture (see :func:`angular_spread`); the magnitude
    ratios of all slices against it, normalised to sum 1, are the relative
    exposure time per slope. The reference slice is sharpened by
    ``(|zeta*Omega_x|+1)(|zeta*Omega_y|+1)`` (``correction="chebyshev"``
    uses ``zeta*max(|Omega_x|, |Omega_y|)+1``), resampled to texel units
    and clipped to [0, 1].

    ``zeta`` is the aperture size times the time-spread of the plane in
    slope units. The spread is the width of the ratio profile minus the
    width the same estimator reports for a sharp plane carrying the
    uncorrected slice, so an unblurred input gets ``zeta = 0``.

    Parameters
    ----------
    blurred : LightField or array
    slope_grid : sequence of float
        Refocus slopes (``1/depth``), any order, all positive.
    correction : {"separable", "chebyshev"}
    percentile : float
        Reference-modulus percentile above which frequencies are compared.

    Returns
    -------
    TextureRecovery
        ``weights`` follow the order of ``slope_grid``; ``depths = 1/slope``.
    """
    slopes_in = np.asarray(slope_grid, dtype=np.float64).ravel()
    if slopes_in.size == 0:
        raise ValueError("slope grid is empty")
    if np.any(slopes_in <= 0) or not np.all(np.isfinite(slopes_in)):
        raise ValueError("slopes must be finite and positive")
    if correction not in ("separable", "chebyshev"):
        raise ValueError(f"unknown correction {correction!r}")
    arr = as_array(blurred)
    ny, nx, nv, nu, _ = arr.shape
    order = np.argsort(slopes_in)
    slopes = slopes_in[order]
    images = [refocus(arr, q).mean(axis=-1) for q in slopes]
    i0 = int(np.argmin([angular_spread(arr, q) for q in slopes]))
    ratios = _slice_magnitudes(images, i0, percentile)
    q0 = slopes[i0]

    uniform = bool(np.ptp(ratios) < 1e-9)
    if uniform:
        warnings.warn("slice magnitudes are indistinguishable; returning uniform weights",
                      stacklevel=2)
        ratios = np.ones_like(ratios)

    # texel s sits at pixel s*q0 of the slice at slope q0
    wx = interp_matrix(to_index(centered_coords(nx) * q0, nx), nx)
    wy = interp_matrix(to_index(centered_coords(ny) * q0, ny), ny)

    zeta = 0.0
    if not uniform and slopes.size > 1:
        from .synth import plane_lightfield  # local: synth imports core only

        pad = 2 * int(np.ceil(max(nx, ny) / (2 * q0) + max(nu, nv))) + 1
        tex = _extend_texture(images[i0], q0, pad)
        sharp = plane_lightfield(tex, 1.0 / q0, (ny, nx, nv, nu), as_lightfield=False)
        own = _slice_magnitudes([refocus(sharp, q).mean(axis=-1) for q in slopes], i0, percentile)
        spread = _profile_width(ratios, slopes) - _profile_width(own, slopes)
        zeta = max(nu, nv) * max(spread, 0.0)

    fy = np.fft.fftfreq(ny)[:, None]
    fx = np.fft.fftfreq(nx)[None, :]
    if correction == "separable":
        boost = (np.abs(zeta * fx) + 1) * (np.abs(zeta * fy) + 1)
    else:
        boost = zeta * np.maximum(np.abs(fx), np.abs(fy)) + 1
    img = np.fft.ifft2(np.fft.fft2(images[i0]) * boost).real
    texture = np.clip(wy @ img @ wx.T, 0.0, 1.0)

    weights = np.empty_like(ratios)
    weights[order] = ratios / ratios.sum()
    return TextureRecovery(texture=texture, weights=weights, zeta=float(zeta),
                           depths=1.0 / slopes_in, depth=float(1.0 / q0), uniform=uniform)


def _extend_texture(img, q0, size):
    """Texture for a plane at ``1/q0`` that reproduces ``img`` when refocused.

    The image shows ``w(x / q0)``; texel ``s`` is read at pixel ``s * q0``
    with edge clamping beyond the image.
    """
    ny, nx = img.shape
    s = centered_coords(size)
    wx = interp_matrix(to_index(s * q0, nx), nx)
    wy = interp_matrix(to_index(s * q0, ny), ny)
    return wy @ img @ wx.T
