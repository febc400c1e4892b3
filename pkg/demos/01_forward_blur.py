"""
Light fields and the motion blur forward model
==============================================

Render a two-layer scene, look at it through single views and epipolar
slices, then blur it with an in-plane and an out-of-plane camera path.
Images go to ``demos/out``.
"""

from pathlib import Path

import numpy as np

from lfdeblur import io as lfio
from lfdeblur.core import epipolar_slice, refocus, rmse, subaperture
from lfdeblur.forward import ExposureConfig, MotionPath, blur
from lfdeblur.synth import demo_scene

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

# a block-textured disk at depth 0.6 in front of a background at 1.4
lf = demo_scene("two-plane", (96, 96, 7, 7), depths=[0.6, 1.4], seed=2)
print("light field dims (ny, nx, nv, nu, nc):", lf.dims)

# a view is a pinhole image; an epipolar slice shows each depth as a line
# family, steeper for nearer layers
lfio.write_png(out / "01_view_center.png", subaperture(lf, 3, 3))
lfio.write_png(out / "01_epi.png", np.repeat(epipolar_slice(lf, 48, 3), 8, axis=1))

# refocusing at slope 1/z sharpens the layer at depth z
for z in (0.6, 1.4):
    lfio.write_png(out / f"01_refocus_z{z}.png", refocus(lf, 1 / z))

# in-plane motion translates every view by the same angular offset
inplane = MotionPath([[0, 0, 0], [1.0, 0.5, 0], [2.0, 0.0, 0]])
b1 = blur(lf, inplane, ExposureConfig(32))
lfio.write_png(out / "01_blur_inplane.png", subaperture(b1, 3, 3))

# out-of-plane motion shears the angles by -x*pz: blur grows with |x|
outofplane = MotionPath.linear([0, 0, 0.04])
b2 = blur(lf, outofplane, ExposureConfig(32))
lfio.write_png(out / "01_blur_outofplane.png", subaperture(b2, 3, 3))

print("central view rmse, in-plane blur:    ", round(rmse(subaperture(b1, 3, 3), subaperture(lf, 3, 3)), 4))
print("central view rmse, out-of-plane blur:", round(rmse(subaperture(b2, 3, 3), subaperture(lf, 3, 3)), 4))
