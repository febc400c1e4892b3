"""
Out-of-plane blur of a single plane
===================================

A plane moving away from the camera is seen at a range of depths during
the exposure. Refocused images at a grid of slopes are slices of the 4D
spectrum; comparing their magnitudes gives the relative time spent at each
depth, and the best-aligned slice gives the texture.
"""

from pathlib import Path

import numpy as np

from lfdeblur import io as lfio
from lfdeblur.core import rmse
from lfdeblur.forward import ExposureConfig, MotionPath, sample_path
from lfdeblur.fourier import recover_texture, slope_time_histogram
from lfdeblur.synth import make_texture, plane_lightfield

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

n, a = 96, 7
size = 2 * int(np.ceil(n * 2.2 / 2 + a))
tex = make_texture("noise", size, seed=0, smooth=1.5)
gt = tex[size // 2 - n // 2:size // 2 + n // 2, size // 2 - n // 2:size // 2 + n // 2]

# sanity case first: no motion
sharp = plane_lightfield(tex, 1.0, (n, n, a, a))
depths = np.linspace(0.8, 1.6, 9)
rec = recover_texture(sharp, 1 / depths)
b = n // 10
print("no blur: depth", rec.depth, "zeta", rec.zeta,
      "rmse", round(rmse(rec.texture[b:-b, b:-b], gt[b:-b, b:-b]), 5))

# the plane recedes from z = 1 to z = 1.5 during the exposure
path = MotionPath.linear([0, 0, -0.5])
cfg = ExposureConfig(32)
zs = 1.0 - sample_path(path, cfg)[:, 2]
blurred = sum(plane_lightfield(tex, z, (n, n, a, a), False) for z in zs) / zs.size
rec = recover_texture(blurred, 1 / depths)
lfio.write_png(out / "03_texture_recovered.png", rec.texture)
lfio.write_png(out / "03_texture_truth.png", gt)
print("moving:  depth", round(rec.depth, 3), "zeta", round(rec.zeta, 3),
      "rmse", round(rmse(rec.texture[b:-b, b:-b], gt[b:-b, b:-b]), 4))

slopes = 1 / depths
order = np.argsort(slopes)
hist = np.empty_like(slopes)
hist[order] = slope_time_histogram(path, ExposureConfig(4096), slopes[order], 1.0)
print("depth   weight   time share")
for z, w, h in zip(depths, rec.weights, hist):
    print(f"{z:5.2f}   {w:.3f}    {h:.3f}")
# the weights are much flatter than the time shares: with a handful of
# views, a slice collects light from a wide band of depths
