"""Desk-scale experiments: loss surfaces, direct logit fitting, granularity.

These routines need no detector or dataset. They sweep a prediction angle
across the canonical range against a fixed ground truth, fit raw logits to
a single angle by gradient descent, and tabulate quantization error and
fit success across bin widths. Everything is deterministic for a fixed
seed and configuration.
"""

import math
from dataclasses import dataclass

import numpy as np

from .coding import (
    CodingConfig,
    build_code_table,
    decode_logits_batch,
    encode_angle,
    encode_angles,
    quantization_error_stats,
)
from .errors import DivergenceError, InvalidInputError
from .geometry import RotatedBoxLongSide, angle_distance, convert_definition
from .losses import (
    LossConfig,
    WeightConfig,
    binary_focal_loss,
    binary_focal_loss_grad,
    loss_weight,
    smooth_l1,
)
from .validation import (
    as_finite_vector,
    check_choice,
    check_finite_scalar,
    check_index,
    check_positive_scalar,
)

# Logit magnitude standing in for a confident network output when a sweep
# turns a codeword back into logits.
LOGIT_SATURATION = 4.0

SWEEP_METHODS = frozenset({
    "reg_smoothl1", "reg_smoothl1_opencv",
    "csl", "dcl_plain", "dcl_log", "dcl_adarsw",
})

_ASPECT_PRESETS = {
    "mixed": (1.0, 8.0),
    "square": (1.0, 1.5),
    "elongated": (1.6, 8.0),  # strictly above the default aspect threshold
}


@dataclass(frozen=True)
class SweepResult:
    """Loss curve of one method over predicted angles for a fixed target."""

    method: str
    theta_gt: float
    aspect: float
    thetas: np.ndarray
    losses: np.ndarray

    def loss_at(self, theta_pred):
        """Loss at the sweep sample closest to ``theta_pred``."""
        i = int(np.argmin(np.abs(self.thetas - theta_pred)))
        return float(self.losses[i])


@dataclass(frozen=True)
class FitTrajectory:
    """Per-step record of fitting logits to one angle by gradient descent."""

    theta_gt: float
    losses: np.ndarray
    decoded: np.ndarray
    final_logits: np.ndarray
    final_theta: float
    final_error: float
    converged: bool


@dataclass(frozen=True)
class FitBatchResult:
    """Aggregate outcome of fitting many targets independently."""

    thetas: np.ndarray
    final_errors: np.ndarray
    converged: np.ndarray
    success_rate: float


@dataclass(frozen=True)
class GranularityRow:
    """One bin width's quantization and trainability summary."""

    omega: float
    num_categories: int
    code_length: int
    max_error: float
    mean_error: float
    fit_rate: float


def sweep_grid(step, angle_range=180.0):
    """Strictly increasing prediction angles covering (-90, 90].

    Points sit at -90 + k * step for k >= 1 with the canonical endpoint 90
    always included.
    """
    step = check_positive_scalar(step, "step")
    half = angle_range / 2.0
    m = int(math.ceil(angle_range / step)) - 1
    pts = -half + step * np.arange(1, m + 1, dtype=np.float64)
    pts = pts[pts < half - 1e-12]
    return np.append(pts, half)


def _check_canonical(theta, angle_range, name):
    theta = check_finite_scalar(theta, name)
    half = angle_range / 2.0
    if not (-half < theta <= half):
        raise InvalidInputError(f"{name} must lie in ({-half}, {half}], got {theta}")
    return theta


def _coding_losses(theta_gt, angles, table, mode, aspect, weight_config, loss_config):
    """Vectorized weighted-focal losses of saturated codeword logits."""
    target = encode_angle(theta_gt, table)
    pred_targets = encode_angles(angles, table)
    logits = LOGIT_SATURATION * (2.0 * pred_targets - 1.0)
    per_bit = binary_focal_loss(np.broadcast_to(target, logits.shape), logits,
                                loss_config.focal_alpha, loss_config.focal_gamma)
    if loss_config.bit_reduction == "mean":
        base = per_bit.mean(axis=1)
    else:
        base = per_bit.sum(axis=1)
    if mode == "none":
        return base
    decoded = decode_logits_batch(logits, table)
    if mode == "log_distance":
        w = np.log(np.abs(theta_gt - decoded) + 1.0)
        if weight_config.log_base is not None:
            w = w / math.log(weight_config.log_base)
        return base * w
    alpha = 1.0 if aspect > weight_config.aspect_threshold else 2.0
    return base * np.abs(np.sin(alpha * np.radians(theta_gt - decoded)))


def _opencv_param_losses(theta_gt, angles, aspect, beta):
    """Smooth-L1 over OpenCV-definition parameter differences.

    Descriptive companion to the long-side regression sweep: near the
    OpenCV boundary the stored sides exchange roles, so the log side
    ratios jump even though the boxes barely move.
    """
    gt = convert_definition(
        RotatedBoxLongSide.from_sides(0.0, 0.0, aspect, 1.0, theta_gt), "opencv")
    out = np.empty(angles.shape[0])
    for i, a in enumerate(angles):
        pred = convert_definition(
            RotatedBoxLongSide.from_sides(0.0, 0.0, aspect, 1.0, float(a)), "opencv")
        diffs = [math.log(pred.w / gt.w), math.log(pred.h / gt.h),
                 pred.theta - gt.theta]
        out[i] = smooth_l1(diffs, [0.0, 0.0, 0.0], beta)
    return out


def loss_surface_sweep(theta_gt, aspect, method, table=None,
                       weight_config=None, loss_config=None, step=1.0):
    """Loss of every candidate angle against a fixed ground truth.

    Methods:
        reg_smoothl1: smooth L1 on the raw angle difference in degrees.
        reg_smoothl1_opencv: smooth L1 on OpenCV-definition parameter
            differences (shows the side-exchange discontinuity).
        csl: focal loss of saturated sparse codewords (needs a sparse table).
        dcl_plain / dcl_log / dcl_adarsw: focal loss of saturated dense
            codewords, unweighted / log-distance weighted / smooth-weighted
            (need a dense table).

    Args:
        theta_gt: Ground-truth angle in degrees, canonical.
        aspect: Ground-truth aspect ratio h/w (>= 1); the sweep uses a unit
            short side.
        method: One of SWEEP_METHODS.
        table: AngleCodeTable for the coding methods.
        weight_config: WeightConfig; supplies aspect_threshold / log_base
            for the weighted methods (the method picks the mode).
        loss_config: LossConfig (defaults).
        step: Grid spacing in degrees.

    Returns:
        SweepResult. The losses attain their minimum at the grid point
        nearest theta_gt.
    """
    check_choice(method, "method", SWEEP_METHODS)
    theta_gt = _check_canonical(theta_gt, 180.0, "theta_gt")
    aspect = check_positive_scalar(aspect, "aspect")
    if aspect < 1.0:
        raise InvalidInputError(f"aspect must be >= 1, got {aspect}")
    weight_config = weight_config or WeightConfig()
    loss_config = loss_config or LossConfig()
    angles = sweep_grid(step)
    if method == "reg_smoothl1":
        d = np.abs(angles - theta_gt)
        beta = loss_config.smooth_l1_beta
        losses = np.where(d < beta, 0.5 * d * d / beta, d - 0.5 * beta)
    elif method == "reg_smoothl1_opencv":
        losses = _opencv_param_losses(theta_gt, angles, aspect,
                                      loss_config.smooth_l1_beta)
    else:
        if table is None:
            raise InvalidInputError(f"method {method!r} needs a code table")
        if method == "csl":
            if table.is_dense:
                raise InvalidInputError("method 'csl' needs a sparse (onehot/csl) table")
            mode = "none"
        else:
            if not table.is_dense:
                raise InvalidInputError(f"method {method!r} needs a dense (bcl/gcl) table")
            mode = {"dcl_plain": "none", "dcl_log": "log_distance",
                    "dcl_adarsw": "adarsw"}[method]
        losses = _coding_losses(theta_gt, angles, table, mode, aspect,
                                weight_config, loss_config)
    return SweepResult(method=method, theta_gt=theta_gt, aspect=aspect,
                       thetas=angles, losses=np.asarray(losses, dtype=np.float64))


def _fit_weights(theta_gt, decoded, mode, weight_config, h_gt, w_gt):
    """Per-target stop-gradient weights for the fitting loop."""
    if mode == "none":
        return np.ones_like(decoded)
    if mode == "log_distance":
        w = np.log(np.abs(theta_gt - decoded) + 1.0)
        if weight_config.log_base is not None:
            w = w / math.log(weight_config.log_base)
        return w
    alpha = np.where(h_gt / w_gt > weight_config.aspect_threshold, 1.0, 2.0)
    return np.abs(np.sin(alpha * np.radians(theta_gt - decoded)))


def fit_many(thetas, table, weight_config=None, loss_config=None,
             steps=2000, learning_rate=1.0, seed=0, h_gt=None, w_gt=None):
    """Fit one logit vector per target angle by plain gradient descent.

    All targets are optimized simultaneously (independent rows of one
    matrix). Logits start i.i.d. uniform in [-0.5, 0.5] from the seeded
    generator. A target counts as converged when the decoded angle ends
    within one bin width (modular) of it.

    Args:
        thetas: Target angles in degrees, canonical.
        table: AngleCodeTable.
        weight_config: WeightConfig; defaults to mode "none" (the weights
            exist to shape full training, not this diagnostic).
        loss_config: LossConfig (defaults).
        steps: Gradient steps.
        learning_rate: Step size.
        seed: Seed for the logit initialization.
        h_gt: Long side(s) for adarsw weighting (scalar or per-target).
        w_gt: Short side(s) for adarsw weighting.

    Returns:
        FitBatchResult.

    Raises:
        DivergenceError: if the optimization produces non-finite logits.
    """
    weight_config = weight_config or WeightConfig(mode="none")
    loss_config = loss_config or LossConfig()
    thetas = as_finite_vector(thetas, "thetas")
    cfg = table.config
    half = cfg.angle_range / 2.0
    if np.any(thetas <= -half) or np.any(thetas > half):
        raise InvalidInputError(f"targets must lie in ({-half}, {half}]")
    steps = check_index(steps, "steps")
    learning_rate = check_positive_scalar(learning_rate, "learning_rate")
    n = thetas.shape[0]
    targets = encode_angles(thetas, table)
    rng = np.random.default_rng(seed)
    logits = rng.uniform(-0.5, 0.5, size=(n, table.code_length))
    mode = weight_config.mode
    if mode == "adarsw":
        if h_gt is None or w_gt is None:
            raise InvalidInputError("adarsw weighting needs h_gt and w_gt")
        h_gt = np.broadcast_to(np.asarray(h_gt, dtype=np.float64), (n,))
        w_gt = np.broadcast_to(np.asarray(w_gt, dtype=np.float64), (n,))
    for step in range(steps):
        grad = binary_focal_loss_grad(targets, logits,
                                      loss_config.focal_alpha,
                                      loss_config.focal_gamma)
        if loss_config.bit_reduction == "mean":
            grad = grad / table.code_length
        if mode != "none":
            decoded = decode_logits_batch(logits, table)
            w = _fit_weights(thetas, decoded, mode, weight_config, h_gt, w_gt)
            grad = grad * w[:, None]
        with np.errstate(over="ignore"):
            logits = logits - learning_rate * grad
        if not np.all(np.isfinite(logits)):
            raise DivergenceError(f"logits became non-finite at step {step}")
    decoded = decode_logits_batch(logits, table)
    d = np.abs(thetas - decoded) % cfg.angle_range
    errors = np.minimum(d, cfg.angle_range - d)
    converged = errors <= cfg.omega + 1e-12
    return FitBatchResult(thetas=thetas, final_errors=errors, converged=converged,
                          success_rate=float(converged.mean()))


def fit_logits(theta_gt, table, weight_config=None, loss_config=None,
               steps=2000, learning_rate=1.0, init_seed=0, init_logits=None,
               h_gt=None, w_gt=None):
    """Single-target version of ``fit_many`` with a full per-step trajectory.

    Records the loss and decoded angle before every update. With
    init_logits set to the saturated target codeword the very first decoded
    angle is already within quantization error.

    Returns:
        FitTrajectory.
    """
    weight_config = weight_config or WeightConfig(mode="none")
    loss_config = loss_config or LossConfig()
    cfg = table.config
    theta_gt = _check_canonical(theta_gt, cfg.angle_range, "theta_gt")
    steps = check_index(steps, "steps")
    learning_rate = check_positive_scalar(learning_rate, "learning_rate")
    target = encode_angle(theta_gt, table)
    if init_logits is not None:
        logits = as_finite_vector(init_logits, "init_logits", length=table.code_length)
    else:
        rng = np.random.default_rng(init_seed)
        logits = rng.uniform(-0.5, 0.5, size=table.code_length)
    if weight_config.mode == "adarsw" and (h_gt is None or w_gt is None):
        raise InvalidInputError("adarsw weighting needs h_gt and w_gt")
    losses = np.empty(steps + 1)
    decoded = np.empty(steps + 1)
    for k in range(steps + 1):
        theta_pred = float(decode_logits_batch(logits[None, :], table)[0])
        per_bit = binary_focal_loss(target, logits,
                                    loss_config.focal_alpha, loss_config.focal_gamma)
        base = per_bit.mean() if loss_config.bit_reduction == "mean" else per_bit.sum()
        w = loss_weight(theta_gt, theta_pred, weight_config, h_gt=h_gt, w_gt=w_gt)
        loss = float(base) * w
        if not math.isfinite(loss):
            raise DivergenceError(f"loss became non-finite at step {k}")
        losses[k] = loss
        decoded[k] = theta_pred
        if k == steps:
            break
        grad = binary_focal_loss_grad(target, logits,
                                      loss_config.focal_alpha,
                                      loss_config.focal_gamma)
        if loss_config.bit_reduction == "mean":
            grad = grad / table.code_length
        with np.errstate(over="ignore"):
            logits = logits - learning_rate * (grad * w)
        if not np.all(np.isfinite(logits)):
            raise DivergenceError(f"logits became non-finite at step {k}")
    final_theta = float(decoded[-1])
    final_error = angle_distance(theta_gt, final_theta, cfg.angle_range)
    return FitTrajectory(theta_gt=theta_gt, losses=losses, decoded=decoded,
                         final_logits=logits, final_theta=final_theta,
                         final_error=final_error,
                         converged=final_error <= cfg.omega + 1e-12)


def granularity_study(omegas, n_targets=200, seed=0, scheme="bcl",
                      angle_range=180.0, quant_samples=100000,
                      steps=2000, learning_rate=1.0,
                      weight_config=None, loss_config=None):
    """Quantization error and fit success for a list of bin widths.

    For each omega: empirical max/mean encode-decode error over
    ``quant_samples`` uniform angles, and the fraction of ``n_targets``
    uniform targets whose fitted logits decode within omega. Row order
    follows the input order; sub-seeds are derived deterministically.

    Returns:
        List of GranularityRow.
    """
    rows = []
    omegas = list(omegas)
    if not omegas:
        raise InvalidInputError("granularity_study needs at least one omega")
    n_targets = check_index(n_targets, "n_targets")
    if n_targets < 1:
        raise InvalidInputError("n_targets must be >= 1")
    for i, omega in enumerate(omegas):
        cfg = CodingConfig(scheme=scheme, omega=omega, angle_range=angle_range)
        table = build_code_table(cfg)
        stats = quantization_error_stats(omega, quant_samples, seed=(seed, i, 0),
                                         angle_range=angle_range, scheme=scheme)
        rng = np.random.default_rng((seed, i, 1))
        half = angle_range / 2.0
        thetas = half - rng.random(n_targets) * angle_range
        fit = fit_many(thetas, table, weight_config, loss_config,
                       steps=steps, learning_rate=learning_rate,
                       seed=(seed, i, 2))
        rows.append(GranularityRow(
            omega=float(omega),
            num_categories=table.num_categories,
            code_length=table.code_length,
            max_error=stats.max_error,
            mean_error=stats.mean_error,
            fit_rate=fit.success_rate,
        ))
    return rows


def synthetic_boxes(n, seed=0, aspect="mixed", center_range=100.0,
                    short_side=(1.0, 10.0)):
    """Random valid long-side boxes for tests and demos.

    Args:
        n: Number of boxes (>= 1).
        seed: RNG seed.
        aspect: Preset name ("mixed", "square", "elongated") or a constant
            aspect ratio >= 1.
        center_range: Centers drawn uniformly from [0, center_range]^2.
        short_side: (low, high) range of the short side.

    Returns:
        List of RotatedBoxLongSide with canonical angles.
    """
    n = check_index(n, "n")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    if isinstance(aspect, str):
        check_choice(aspect, "aspect", set(_ASPECT_PRESETS))
        lo, hi = _ASPECT_PRESETS[aspect]
    else:
        a = check_positive_scalar(aspect, "aspect")
        if a < 1.0:
            raise InvalidInputError(f"aspect must be >= 1, got {a}")
        lo = hi = a
    rng = np.random.default_rng(seed)
    boxes = []
    for _ in range(n):
        cx, cy = rng.uniform(0.0, center_range, size=2)
        w = rng.uniform(*short_side)
        ratio = lo if lo == hi else rng.uniform(lo, hi)
        theta = 90.0 - rng.random() * 180.0
        boxes.append(RotatedBoxLongSide(cx, cy, h=w * ratio, w=w, theta=theta))
    return boxes
