"""
In-plane blur: 4D versus per-view 2D deconvolution
==================================================

In-plane camera motion convolves the light field with one angular kernel,
whatever the scene depth. A single view, on the other hand, sees a
different spatial blur for every depth. We blur an angle-periodic
three-depth scene with longer and longer linear paths and compare Wiener
deconvolution in 4D against the 2D baseline that assumes one depth.
"""

import numpy as np

from lfdeblur.core import rmse
from lfdeblur.forward import ExposureConfig, MotionPath
from lfdeblur.fourier import (convolve_kernel, deconvolve_inplane, deconvolve_view_2d,
                              projected_kernel_2d, rasterize_kernel)
from lfdeblur.synth import make_texture, plane_lightfield, tile_texture

nu, n, depths = 21, 48, (0.6, 1.0, 1.6)
size = 2 * int(n * max(depths) / 2 + nu + 4) + 1

# textures that repeat every nu texels make the scene periodic in angle, so
# the FFT convolution below is exactly the physical blur
lf = 0
for k, z in enumerate(depths):
    tile = make_texture("noise", nu, seed=k, smooth=2.0)
    lf = lf + plane_lightfield(tile_texture(tile, size), z, (n, n, nu, nu), False)
lf /= len(depths)

c, b = nu // 2, n // 4
gt = lf[b:-b, b:-b, c, c]
rng = np.random.default_rng(0)
cfg = ExposureConfig(32)

print("length   rmse 4D   rmse 2D")
for length in (2, 4, 6, 8, 10):
    path = MotionPath.linear([length, 0, 0])
    k = rasterize_kernel(path, cfg, (nu, nu))
    blurred = convolve_kernel(lf, k) + 0.01 * rng.standard_normal(lf.shape)
    d4 = deconvolve_inplane(blurred, k, 1e-3)[:, :, c, c]
    # the 2D baseline has to pick one depth for its kernel
    k2 = projected_kernel_2d(path, cfg, (n, n), depth=1.0)
    d2 = deconvolve_view_2d(blurred[:, :, c, c], k2, 1e-3)
    print(f"{length:6d}   {rmse(d4[b:-b, b:-b], gt):.4f}    {rmse(d2[b:-b, b:-b], gt):.4f}")
