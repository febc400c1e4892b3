"""Blind light field deblurring by joint first-order optimisation.

Stage 1 estimates the sharp light field and the Bezier camera path together
under an annealed, thresholded-quadratic gradient prior (an approximation to
counting nonzero gradients). Stage 2 freezes the path and refines the light
field under a smoothed anisotropic 4D total variation prior. Both stages use
Adam with separate step sizes for the light field and the path; the stage 2
step follows a cosine decay.
"""

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .core import LightField, as_array
from .forward import ExposureConfig, MotionPath, blur, blur_adjoint, path_gradient

__all__ = [
    "SolverConfig",
    "SolverReport",
    "SolverDivergence",
    "AdamState",
    "adam_step",
    "data_term",
    "sparse_gradient_prior",
    "tv_prior",
    "blind_deblur",
    "stage2_learning_rate",
]

TV_DELTA = 1e-4


@dataclass(frozen=True)
class SolverConfig:
    """Weights, schedules and step sizes for :func:`blind_deblur`.

    ``lam`` is the weight of the sparse gradient prior (``"lambda"`` in JSON
    configs). ``T`` is the number of exposure time samples and ``n`` the
    number of Bezier control points.
    """

    lam: float = 2e-4
    eps_start: float = 0.2
    eps_end: float = 0.01
    eps_decay: float = 0.995
    lr_lightfield: float = 5e-3
    lr_path: float = 0.03
    iters_stage1: int = 1500
    iters_stage2: int = 500
    lambda_tv: float = 1e-2
    T: int = 16
    n: int = 3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        for name in ("lam", "eps_start", "eps_end", "lr_lightfield", "lr_path",
                     "lambda_tv", "eps_hat"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number, got {v!r}")
        if self.eps_end > self.eps_start:
            raise ValueError("eps_end must not exceed eps_start")
        if not 0 < self.eps_decay <= 1:
            raise ValueError("eps_decay must lie in (0, 1]")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        for name in ("iters_stage1", "iters_stage2"):
            if int(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be >= 0")
        if int(self.T) < 1:
            raise ValueError("T must be >= 1")
        if int(self.n) < 2:
            raise ValueError("n must be >= 2")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


@dataclass
class SolverReport:
    """Traces and final estimates of a solver run.

    ``loss_trace`` has one ``(data, prior)`` row per iteration, stage 1 then
    stage 2; ``stage`` marks which stage each row belongs to. ``eps_trace``
    holds the prior threshold used at each stage-1 iteration.
    """

    loss_trace: np.ndarray
    stage: np.ndarray
    eps_trace: np.ndarray
    final_path: MotionPath
    final_lf: LightField
    path_trace: np.ndarray = field(default=None)
    final_data: float = float("nan")
    final_prior: float = float("nan")
    diverged: bool = False
    message: str = ""

    @property
    def total_loss(self):
        return self.loss_trace.sum(axis=1)

    def to_dict(self):
        return {
            "loss_trace": self.loss_trace.tolist(),
            "stage": self.stage.tolist(),
            "eps_trace": self.eps_trace.tolist(),
            "final_path": self.final_path.control_points.tolist(),
            "final_data": self.final_data,
            "final_prior": self.final_prior,
            "final_loss": self.final_data + self.final_prior,
            "diverged": self.diverged,
            "message": self.message,
        }


class SolverDivergence(RuntimeError):
    """Raised when the objective becomes NaN or Inf; carries the partial report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------- objectives

def data_term(lf, path, observed, cfg=ExposureConfig()):
    """Squared L2 misfit ``||blur(lf, path) - observed||^2`` and its gradients.

    Returns ``(value, grad_lf, grad_path)`` with ``grad_lf`` a float64 array
    shaped like ``lf`` (5D) and ``grad_path`` of shape ``(n, 3)``.
    """
    arr = as_array(lf)
    obs = as_array(observed)
    if arr.shape != obs.shape:
        raise ValueError(f"light field {arr.shape} and observation {obs.shape} differ")
    res = blur(arr, path, cfg) - obs
    value = float(np.sum(res * res))
    grad_lf = 2.0 * blur_adjoint(res, path, cfg)
    grad_path = path_gradient(arr, path, 2.0 * res, cfg)
    return value, grad_lf, grad_path


def _forward_diffs(arr):
    # forward differences along y, x, v, u; the last slice (clamped) is zero
    out = []
    for ax in range(4):
        d = np.zeros_like(arr)
        sl_hi = [slice(None)] * arr.ndim
        sl_lo = [slice(None)] * arr.ndim
        sl_hi[ax] = slice(1, None)
        sl_lo[ax] = slice(None, -1)
        d[tuple(sl_lo)] = arr[tuple(sl_hi)] - arr[tuple(sl_lo)]
        out.append(d)
    return out


def _diff_adjoint(g, ax):
    """Transpose of the forward difference along ``ax`` applied to ``g``."""
    out = np.zeros_like(g)
    n = g.shape[ax]
    if n < 2:
        return out
    lo = [slice(None)] * g.ndim
    hi = [slice(None)] * g.ndim
    lo[ax] = slice(None, -1)
    hi[ax] = slice(1, None)
    gl = g[tuple(lo)]
    out[tuple(hi)] += gl
    out[tuple(lo)] -= gl
    return out


def sparse_gradient_prior(lf, eps):
    """Thresholded quadratic penalty on forward differences along all 4 axes.

    Each difference ``d`` contributes ``d**2 / eps**2`` when ``|d| <= eps``
    and 1 otherwise, so the value tends to the count of nonzero differences as
    ``eps -> 0``. The gradient is ``2 d / eps**2`` inside the threshold and 0
    outside. Returns ``(value, grad_lf)``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    arr = as_array(lf)
    value = 0.0
    grad = np.zeros_like(arr)
    inv = 1.0 / (eps * eps)
    for ax, d in enumerate(_forward_diffs(arr)):
        inside = np.abs(d) <= eps
        value += float(np.sum(np.where(inside, d * d * inv, 1.0)))
        grad += _diff_adjoint(np.where(inside, 2.0 * d * inv, 0.0), ax)
    # the clamped last slice has d == 0 and contributes nothing
    return value, grad


def tv_prior(lf, delta=TV_DELTA):
    """Smoothed anisotropic 4D total variation ``sum(sqrt(d**2 + delta**2) - delta)``.

    Returns ``(value, grad_lf)``.
    """
    arr = as_array(lf)
    value = 0.0
    grad = np.zeros_like(arr)
    for ax, d in enumerate(_forward_diffs(arr)):
        s = np.sqrt(d * d + delta * delta)
        value += float(np.sum(s - delta))
        grad += _diff_adjoint(d / s, ax)
    return value, grad


# ---------------------------------------------------------------- optimiser

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls(np.zeros_like(params, dtype=np.float64), np.zeros_like(params, dtype=np.float64))


def adam_step(state, params, grads, lr, beta1=0.9, beta2=0.999, eps_hat=1e-8, mask=None):
    """One bias-corrected Adam update; returns ``(state, params)``.

    ``mask`` (same shape, boolean) marks entries allowed to move; masked-out
    gradients are zeroed before the moments are updated, so those entries
    never change.
    """
    g = np.asarray(grads, dtype=np.float64)
    if mask is not None:
        g = np.where(mask, g, 0.0)
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * g
    v = beta2 * state.v + (1 - beta2) * g * g
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    new = np.asarray(params, dtype=np.float64) - lr * m_hat / (np.sqrt(v_hat) + eps_hat)
    return AdamState(m, v, t), new


# ---------------------------------------------------------------- solver

def _initial_path(cfg):
    cp = np.zeros((cfg.n, 3))
    if int(cfg.iters_stage1) == 0:
        # nothing to break the symmetry for; stage 2 runs at the zero path
        return cp
    rng = np.random.default_rng(cfg.seed)
    cp[1:] = rng.uniform(-1e-2, 1e-2, size=(cfg.n - 1, 3))
    # pz is a shear; keep its perturbation on the same angular scale at the
    # image edge rather than letting it dominate
    cp[1:, 2] *= 0.1
    return cp


def _report(rows, stages, eps_trace, cp, arr, template, path_rows, diverged=False, msg=""):
    return SolverReport(
        loss_trace=np.array(rows, dtype=np.float64).reshape(-1, 2),
        stage=np.array(stages, dtype=int),
        eps_trace=np.array(eps_trace, dtype=np.float64),
        final_path=MotionPath(cp),
        final_lf=template.with_data(arr) if isinstance(template, LightField) else LightField(arr),
        path_trace=np.array(path_rows, dtype=np.float64).reshape(-1, cp.shape[0], 3),
        diverged=diverged,
        message=msg,
    )


def stage2_learning_rate(cfg, it):
    """Cosine-decayed light field step for stage 2.

    The TV objective is nearly non-smooth, and constant-size Adam steps keep
    jittering around its minimum; decaying them lets the loss settle.
    """
    n = max(int(cfg.iters_stage2), 1)
    return cfg.lr_lightfield * 0.5 * (1.0 + math.cos(math.pi * it / n))


def blind_deblur(observed, cfg=SolverConfig(), callback=None):
    """Estimate the sharp light field and camera path from a blurred light field.

    Parameters
    ----------
    observed : LightField
    cfg : SolverConfig
    callback : callable, optional
        Called as ``callback(stage, iteration, data, prior, path)`` after each
        iteration.

    Returns
    -------
    SolverReport

    Raises
    ------
    SolverDivergence
        If the objective becomes non-finite; ``err.report`` holds the traces
        up to that point.
    """
    obs = as_array(observed)
    exposure = ExposureConfig(cfg.T)
    arr = obs.copy()
    cp = _initial_path(cfg)
    mask = np.ones_like(cp, dtype=bool)
    mask[0] = False

    rows, stages, eps_trace, path_rows = [], [], [], []
    lf_state = AdamState.zeros_like(arr)
    path_state = AdamState.zeros_like(cp)
    eps = float(cfg.eps_start)

    def check(data, prior):
        if not (math.isfinite(data) and math.isfinite(prior)):
            rep = _report(rows, stages, eps_trace, cp, obs, observed, path_rows, True,
                          "objective became non-finite")
            raise SolverDivergence("solver diverged: objective became non-finite", rep)

    for it in range(int(cfg.iters_stage1)):
        path = MotionPath(cp)
        data, g_lf, g_path = data_term(arr, path, obs, exposure)
        prior, g_prior = sparse_gradient_prior(arr, eps)
        check(data, prior)
        rows.append((data, cfg.lam * prior))
        stages.append(1)
        eps_trace.append(eps)
        path_rows.append(cp.copy())
        lf_state, arr = adam_step(lf_state, arr, g_lf + cfg.lam * g_prior, cfg.lr_lightfield,
                                  cfg.beta1, cfg.beta2, cfg.eps_hat)
        path_state, cp = adam_step(path_state, cp, g_path, cfg.lr_path,
                                   cfg.beta1, cfg.beta2, cfg.eps_hat, mask=mask)
        if callback is not None:
            callback(1, it, data, cfg.lam * prior, cp)
        eps = max(cfg.eps_end, eps * cfg.eps_decay)

    path = MotionPath(cp)
    lf_state = AdamState.zeros_like(arr)
    for it in range(int(cfg.iters_stage2)):
        res = blur(arr, path, exposure) - obs
        data = float(np.sum(res * res))
        tv, g_tv = tv_prior(arr)
        check(data, tv)
        rows.append((data, cfg.lambda_tv * tv))
        stages.append(2)
        path_rows.append(cp.copy())
        g = 2.0 * blur_adjoint(res, path, exposure) + cfg.lambda_tv * g_tv
        lr = stage2_learning_rate(cfg, it)
        lf_state, arr = adam_step(lf_state, arr, g, lr, cfg.beta1, cfg.beta2, cfg.eps_hat)
        if callback is not None:
            callback(2, it, data, cfg.lambda_tv * tv, cp)

    rep = _report(rows, stages, eps_trace, cp, arr, observed, path_rows)
    # objective re-evaluated on the emitted (float32) estimate
    final = as_array(rep.final_lf)
    res = blur(final, rep.final_path, exposure) - obs
    rep.final_data = float(np.sum(res * res))
    if cfg.iters_stage2 > 0:
        rep.final_prior = cfg.lambda_tv * tv_prior(final)[0]
    else:
        rep.final_prior = cfg.lam * sparse_gradient_prior(final, eps)[0]
    return rep
