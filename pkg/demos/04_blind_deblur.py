"""
Blind deblurring: light field and camera path together
======================================================

Nothing but the blurred light field is given. Stage 1 alternates Adam steps
on the light field and on the Bezier control points under an annealed
sparse-gradient prior; stage 2 fixes the path and cleans up with 4D TV.
The default configuration takes a few minutes on one core.
"""

import sys
import time
from pathlib import Path

import numpy as np

from lfdeblur import io as lfio
from lfdeblur.core import rmse, subaperture
from lfdeblur.forward import ExposureConfig, MotionPath, blur
from lfdeblur.solver import SolverConfig, blind_deblur
from lfdeblur.synth import demo_scene

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

sharp = demo_scene("two-plane", (48, 48, 6, 6), depths=[0.7, 1.4], seed=0)
truth = MotionPath([[0, 0, 0], [0.2, 0.1, 0.003], [1.4, 0.9, 0.03]])
observed = blur(sharp, truth, ExposureConfig(16))

# pass "quick" for a short run that only shows the mechanics
cfg = SolverConfig()
if "quick" in sys.argv[1:]:
    cfg = SolverConfig(iters_stage1=300, iters_stage2=100)


def progress(stage, it, data, prior, cp):
    if it % 250 == 0:
        print(f"stage {stage} iter {it:4d}  data {data:8.3f}  prior {prior:8.3f}  "
              f"last control point {np.round(cp[-1], 3).tolist()}")


t0 = time.perf_counter()
rep = blind_deblur(observed, cfg, callback=progress)
print(f"done in {time.perf_counter() - t0:.0f} s")

c = (3, 3)
print("central view rmse blurred  ", round(rmse(subaperture(observed, *c), subaperture(sharp, *c)), 4))
print("central view rmse deblurred", round(rmse(subaperture(rep.final_lf, *c), subaperture(sharp, *c)), 4))
print("true path     ", truth.control_points.tolist())
print("recovered path", np.round(rep.final_path.control_points, 3).tolist())

lfio.write_png(out / "04_blurred.png", subaperture(observed, *c))
lfio.write_png(out / "04_deblurred.png", subaperture(rep.final_lf, *c))
lfio.write_png(out / "04_sharp.png", subaperture(sharp, *c))
