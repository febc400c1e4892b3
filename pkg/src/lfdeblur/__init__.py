"""Light field motion blur: forward model, Fourier analysis and blind deblurring."""

from .core import (LightField, centered_coords, epipolar_slice, full_aperture, refocus, rmse,
                   slope_for_depth, subaperture)
from .forward import (ExposureConfig, MotionPath, bezier_eval, blur, blur_adjoint, path_gradient,
                      sample_path, shear_shift)
from .fourier import (BlurKernel, TextureRecovery, affine_spectrum, convolve_kernel,
                      deconvolve_inplane, deconvolve_view_2d, extract_fourier_slice, fft4d,
                      ifft4d, projected_kernel_2d, rasterize_kernel, recover_texture)
from .solver import (SolverConfig, SolverDivergence, SolverReport, adam_step, blind_deblur,
                     data_term, sparse_gradient_prior, tv_prior)
from .synth import Plane, PlaneScene, demo_scene, make_texture, multiplane_lightfield, plane_lightfield

__version__ = "0.1.0"
