"""Loss functions and the angle-aware weights applied to them.

The angle classification loss is a per-bit sigmoid focal loss on the
encoded target, scaled by a weight computed from the decoded prediction.
The weight is treated as a constant during differentiation (no gradient
flows through the decode). Two weights are provided: the raw
log-distance weight log(|dtheta| + 1), which is *not* periodic and blows
up across the angle boundary, and the aspect-ratio-sensitive smooth
weight |sin(alpha * dtheta)| with alpha = 1 for elongated boxes and 2 for
square-like ones, which is periodic and vanishes whenever the decoded
box coincides with the target up to symmetry.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .coding import decode_logits, encode_angle
from .errors import DivergenceError, InvalidInputError
from .geometry import RotatedBoxLongSide
from .validation import (
    as_finite_vector,
    check_choice,
    check_finite_scalar,
    check_in_range,
    check_index,
    check_positive_scalar,
)

WEIGHT_MODES = frozenset({"none", "log_distance", "adarsw"})
_REDUCTIONS = frozenset({"sum", "mean"})


@dataclass(frozen=True)
class WeightConfig:
    """Selects and parameterizes the angle-loss weight.

    Attributes:
        mode: "none", "log_distance" or "adarsw".
        aspect_threshold: Aspect ratio r separating square-like boxes
            (h/w <= r, symmetric under 90-degree rotation, alpha = 2) from
            elongated ones (alpha = 1).
        log_base: Optional logarithm base for "log_distance"; natural log
            when None.
    """

    mode: str = "adarsw"
    aspect_threshold: float = 1.5
    log_base: Optional[float] = None

    def __post_init__(self):
        check_choice(self.mode, "mode", WEIGHT_MODES)
        r = check_positive_scalar(self.aspect_threshold, "aspect_threshold")
        if r < 1.0:
            raise InvalidInputError(f"aspect_threshold must be >= 1, got {r}")
        object.__setattr__(self, "aspect_threshold", r)
        if self.log_base is not None:
            base = check_positive_scalar(self.log_base, "log_base")
            if base == 1.0:
                raise InvalidInputError("log_base must not be 1")
            object.__setattr__(self, "log_base", base)


@dataclass(frozen=True)
class LossConfig:
    """Focal, smooth-L1 and multi-task weighting parameters.

    The lambdas follow the regression / angle / classification split with
    defaults 1.0, 0.5 and 0.1.
    """

    lambda_reg: float = 1.0
    lambda_angle: float = 0.5
    lambda_cls: float = 0.1
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    smooth_l1_beta: float = 1.0
    bit_reduction: str = "sum"

    def __post_init__(self):
        for name in ("lambda_reg", "lambda_angle", "lambda_cls"):
            v = check_finite_scalar(getattr(self, name), name)
            if v < 0.0:
                raise InvalidInputError(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, v)
        alpha = check_in_range(self.focal_alpha, "focal_alpha", 0.0, 1.0,
                               low_open=True, high_open=True)
        object.__setattr__(self, "focal_alpha", alpha)
        gamma = check_finite_scalar(self.focal_gamma, "focal_gamma")
        if gamma < 0.0:
            raise InvalidInputError(f"focal_gamma must be >= 0, got {gamma}")
        object.__setattr__(self, "focal_gamma", gamma)
        object.__setattr__(self, "smooth_l1_beta",
                           check_positive_scalar(self.smooth_l1_beta, "smooth_l1_beta"))
        check_choice(self.bit_reduction, "bit_reduction", _REDUCTIONS)


def angle_distance_weight(theta_gt, theta_pred, log_base=None):
    """Logarithmic weight on the raw (non-modular) angle difference.

    Deliberately ignores angle periodicity: a prediction of -89 for a
    ground truth of 89 is 178 degrees away by this measure even though the
    boxes nearly coincide. Returns log(|theta_gt - theta_pred| + 1).
    """
    theta_gt = check_finite_scalar(theta_gt, "theta_gt")
    theta_pred = check_finite_scalar(theta_pred, "theta_pred")
    w = math.log(abs(theta_gt - theta_pred) + 1.0)
    if log_base is not None:
        w /= math.log(check_positive_scalar(log_base, "log_base"))
    return w


def adarsw_weight(theta_gt, theta_pred, h_gt, w_gt, aspect_threshold=1.5):
    """Aspect-ratio-sensitive smooth angle weight |sin(alpha * dtheta)|.

    alpha = 1 when h_gt / w_gt > aspect_threshold (elongated box, period
    180) and alpha = 2 otherwise (square-like box, also symmetric under a
    90-degree rotation, period 90). The difference is taken in degrees and
    converted to radians inside the sine.

    Args:
        theta_gt: Ground-truth angle in degrees.
        theta_pred: Decoded predicted angle in degrees.
        h_gt: Ground-truth long side.
        w_gt: Ground-truth short side.
        aspect_threshold: Ratio separating the two regimes.

    Returns:
        Weight in [0, 1].
    """
    theta_gt = check_finite_scalar(theta_gt, "theta_gt")
    theta_pred = check_finite_scalar(theta_pred, "theta_pred")
    h_gt = check_positive_scalar(h_gt, "h_gt")
    w_gt = check_positive_scalar(w_gt, "w_gt")
    if h_gt < w_gt:
        raise InvalidInputError(f"h_gt must be >= w_gt, got h={h_gt} w={w_gt}")
    r = check_positive_scalar(aspect_threshold, "aspect_threshold")
    alpha = 1.0 if h_gt / w_gt > r else 2.0
    return abs(math.sin(alpha * math.radians(theta_gt - theta_pred)))


def loss_weight(theta_gt, theta_pred, config, h_gt=None, w_gt=None):
    """Dispatch on WeightConfig.mode; "adarsw" requires the gt sides."""
    if config.mode == "none":
        return 1.0
    if config.mode == "log_distance":
        return angle_distance_weight(theta_gt, theta_pred, config.log_base)
    if h_gt is None or w_gt is None:
        raise InvalidInputError("adarsw weighting needs h_gt and w_gt")
    return adarsw_weight(theta_gt, theta_pred, h_gt, w_gt, config.aspect_threshold)


def _log_sigmoid_pair(logits):
    """(log p, log (1 - p)) for p = sigmoid(logits), computed stably."""
    log_p = -np.logaddexp(0.0, -logits)
    log_1mp = -np.logaddexp(0.0, logits)
    return log_p, log_1mp


def binary_focal_loss(targets, logits, alpha=0.25, gamma=2.0):
    """Elementwise sigmoid focal loss with soft targets.

    loss = -[alpha * t * (1-p)^gamma * log p
             + (1-alpha) * (1-t) * p^gamma * log(1-p)],  p = sigmoid(logit).

    Linear in t, so soft window targets are valid. Reduces to weighted
    binary cross-entropy at gamma = 0.

    Args:
        targets: Array of targets in [0, 1].
        logits: Array of raw outputs, same shape as targets.
        alpha: Positive-class balance in (0, 1).
        gamma: Focusing exponent >= 0.

    Returns:
        float64 array of per-element losses, same shape as the inputs.
    """
    targets = np.asarray(targets, dtype=np.float64)
    logits = np.asarray(logits, dtype=np.float64)
    if targets.shape != logits.shape:
        raise InvalidInputError(
            f"targets and logits must have the same shape, "
            f"got {targets.shape} and {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise InvalidInputError("logits must be finite")
    if not np.all((targets >= 0.0) & (targets <= 1.0)):
        raise InvalidInputError("targets must lie in [0, 1]")
    p = 1.0 / (1.0 + np.exp(-np.clip(logits, -500, 500)))
    log_p, log_1mp = _log_sigmoid_pair(logits)
    pos = alpha * targets * np.power(1.0 - p, gamma) * log_p
    neg = (1.0 - alpha) * (1.0 - targets) * np.power(p, gamma) * log_1mp
    return -(pos + neg)


def binary_focal_loss_grad(targets, logits, alpha=0.25, gamma=2.0):
    """Analytic d(loss)/d(logit) of ``binary_focal_loss``, elementwise.

    With p = sigmoid(x) and p' = p(1-p):
        d/dx = alpha * t * [gamma * p * (1-p)^gamma * log p - (1-p)^(gamma+1)]
             + (1-alpha) * (1-t) * [p^(gamma+1) - gamma * p^gamma * (1-p) * log(1-p)]
    At gamma = 0, alpha = 0.5 this is 0.5 * (p - t).
    """
    targets = np.asarray(targets, dtype=np.float64)
    logits = np.asarray(logits, dtype=np.float64)
    if targets.shape != logits.shape:
        raise InvalidInputError(
            f"targets and logits must have the same shape, "
            f"got {targets.shape} and {logits.shape}")
    p = 1.0 / (1.0 + np.exp(-np.clip(logits, -500, 500)))
    log_p, log_1mp = _log_sigmoid_pair(logits)
    one_m_p = 1.0 - p
    pos = gamma * p * np.power(one_m_p, gamma) * log_p - np.power(one_m_p, gamma + 1.0)
    neg = np.power(p, gamma + 1.0) - gamma * np.power(p, gamma) * one_m_p * log_1mp
    return alpha * targets * pos + (1.0 - alpha) * (1.0 - targets) * neg


def _reduce_bits(values, reduction, axis=None):
    if reduction == "mean":
        return values.mean(axis=axis)
    return values.sum(axis=axis)


def dcl_loss(theta_gt, angle_logits, table, weight_config=None, loss_config=None,
             h_gt=None, w_gt=None):
    """Weighted focal loss of an angle prediction against one ground truth.

    Encodes theta_gt with the table, computes the per-bit focal loss of the
    logits against that target, reduces over bits (sum by default) and
    multiplies by the configured weight evaluated at the decoded angle. The
    weight is a stop-gradient factor.

    Args:
        theta_gt: Ground-truth angle in degrees, canonical.
        angle_logits: Raw outputs, length table.code_length.
        table: AngleCodeTable.
        weight_config: WeightConfig (defaults to adarsw).
        loss_config: LossConfig (defaults).
        h_gt: Ground-truth long side; required for adarsw weighting.
        w_gt: Ground-truth short side; required for adarsw weighting.

    Returns:
        Scalar loss.
    """
    weight_config = weight_config or WeightConfig()
    loss_config = loss_config or LossConfig()
    logits = as_finite_vector(angle_logits, "angle_logits", length=table.code_length)
    target = encode_angle(theta_gt, table)
    per_bit = binary_focal_loss(target, logits,
                                loss_config.focal_alpha, loss_config.focal_gamma)
    base = float(_reduce_bits(per_bit, loss_config.bit_reduction))
    theta_pred = decode_logits(logits, table)
    w = loss_weight(theta_gt, theta_pred, weight_config, h_gt=h_gt, w_gt=w_gt)
    return base * w


def dcl_loss_grad(theta_gt, angle_logits, table, weight_config=None, loss_config=None,
                  h_gt=None, w_gt=None):
    """Analytic gradient of ``dcl_loss`` w.r.t. the logits.

    The weight does not propagate gradient (and the decode inside it is
    piecewise constant anyway), so this is the reduced focal gradient
    scaled by the weight value.
    """
    weight_config = weight_config or WeightConfig()
    loss_config = loss_config or LossConfig()
    logits = as_finite_vector(angle_logits, "angle_logits", length=table.code_length)
    target = encode_angle(theta_gt, table)
    grad = binary_focal_loss_grad(target, logits,
                                  loss_config.focal_alpha, loss_config.focal_gamma)
    if loss_config.bit_reduction == "mean":
        grad = grad / table.code_length
    theta_pred = decode_logits(logits, table)
    w = loss_weight(theta_gt, theta_pred, weight_config, h_gt=h_gt, w_gt=w_gt)
    return grad * w


def box_offsets(gt_box, anchor):
    """Regression targets of a ground-truth box against an anchor.

    t_x = (x - x_a) / w_a, t_y = (y - y_a) / h_a,
    t_w = log(w / w_a),    t_h = log(h / h_a).
    Note the cross pairing: the x offset is normalized by the anchor
    *short* side and the y offset by the anchor *long* side.

    Args:
        gt_box: RotatedBoxLongSide.
        anchor: RotatedBoxLongSide.

    Returns:
        float64 array [t_x, t_y, t_w, t_h].
    """
    for name, b in (("gt_box", gt_box), ("anchor", anchor)):
        if not isinstance(b, RotatedBoxLongSide):
            raise InvalidInputError(f"{name} must be a RotatedBoxLongSide")
    return np.array([
        (gt_box.x - anchor.x) / anchor.w,
        (gt_box.y - anchor.y) / anchor.h,
        math.log(gt_box.w / anchor.w),
        math.log(gt_box.h / anchor.h),
    ])


def decode_box_offsets(offsets, anchor, theta=None):
    """Apply regression offsets to an anchor; the angle is supplied separately.

    Inverse of ``box_offsets`` for offsets produced from valid boxes. When
    the exponentiated sides come out with the long/short roles swapped the
    result is normalized (sides exchanged, axis rotated 90 degrees) so the
    returned box is always a valid long-side box.

    Args:
        offsets: [t_x, t_y, t_w, t_h].
        anchor: RotatedBoxLongSide.
        theta: Angle for the decoded box in degrees; anchor.theta if None.

    Returns:
        RotatedBoxLongSide.

    Raises:
        DivergenceError: if exp(t_w) or exp(t_h) overflows.
    """
    t = as_finite_vector(offsets, "offsets", length=4)
    if not isinstance(anchor, RotatedBoxLongSide):
        raise InvalidInputError("anchor must be a RotatedBoxLongSide")
    if theta is None:
        theta = anchor.theta
    x = t[0] * anchor.w + anchor.x
    y = t[1] * anchor.h + anchor.y
    with np.errstate(over="ignore"):
        w = anchor.w * math.exp(min(t[2], 700.0)) if t[2] <= 700.0 else math.inf
        h = anchor.h * math.exp(min(t[3], 700.0)) if t[3] <= 700.0 else math.inf
    if not (math.isfinite(w) and math.isfinite(h)):
        raise DivergenceError("box offset exponentiation overflowed")
    return RotatedBoxLongSide.from_sides(x, y, side_a=h, side_b=w, angle_of_a=theta)


def smooth_l1(pred, target, beta=1.0):
    """Summed smooth-L1 (Huber-style) loss.

    Per component: 0.5 * d^2 / beta for |d| < beta, else |d| - 0.5 * beta.
    Scalars are treated as length-1 vectors.
    """
    beta = check_positive_scalar(beta, "beta")
    pred = np.atleast_1d(np.asarray(pred, dtype=np.float64))
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if pred.shape != target.shape:
        raise InvalidInputError(
            f"pred and target must have the same shape, got {pred.shape} and {target.shape}")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(target))):
        raise InvalidInputError("smooth_l1 inputs must be finite")
    d = np.abs(pred - target)
    per = np.where(d < beta, 0.5 * d * d / beta, d - 0.5 * beta)
    return float(per.sum())


@dataclass(frozen=True)
class TrainingSample:
    """One anchor's worth of predictions and assignment for the joint loss.

    ``objectness`` 1 marks a positive (foreground) anchor; positives need a
    ground-truth box and class label. Background anchors contribute only to
    the classification term.
    """

    anchor: RotatedBoxLongSide
    class_logits: np.ndarray
    angle_logits: np.ndarray
    box_pred: np.ndarray
    objectness: int = 0
    gt_box: Optional[RotatedBoxLongSide] = None
    class_label: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.anchor, RotatedBoxLongSide):
            raise InvalidInputError("anchor must be a RotatedBoxLongSide")
        obj = self.objectness
        if isinstance(obj, bool):
            obj = int(obj)
        if obj not in (0, 1):
            raise InvalidInputError(f"objectness must be 0 or 1, got {self.objectness!r}")
        object.__setattr__(self, "objectness", obj)
        object.__setattr__(self, "class_logits",
                           as_finite_vector(self.class_logits, "class_logits"))
        object.__setattr__(self, "angle_logits",
                           as_finite_vector(self.angle_logits, "angle_logits"))
        object.__setattr__(self, "box_pred",
                           as_finite_vector(self.box_pred, "box_pred", length=4))
        if obj == 1:
            if not isinstance(self.gt_box, RotatedBoxLongSide):
                raise InvalidInputError("positive samples need a gt_box")
            check_index(self.class_label, "class_label",
                        size=self.class_logits.shape[0])


class MultiTaskLoss(NamedTuple):
    total: float
    reg_term: float
    angle_term: float
    cls_term: float


def multitask_loss(samples, table, weight_config=None, loss_config=None):
    """Joint detection loss over a batch of samples.

    total = lambda_reg / N * sum_pos smooth_l1(box_pred, offsets)
          + lambda_angle / N * sum_pos dcl_loss(...)
          + lambda_cls / N * sum_all focal(class one-hot, class_logits)

    N is the number of samples (positives and background). Class targets
    are one-hot rows for positives and all-zero rows for background.

    Args:
        samples: Non-empty sequence of TrainingSample.
        table: AngleCodeTable for the angle term.
        weight_config: WeightConfig (defaults to adarsw).
        loss_config: LossConfig (defaults).

    Returns:
        MultiTaskLoss(total, reg_term, angle_term, cls_term).
    """
    weight_config = weight_config or WeightConfig()
    loss_config = loss_config or LossConfig()
    samples = list(samples)
    if not samples:
        raise InvalidInputError("multitask_loss needs at least one sample")
    n_classes = samples[0].class_logits.shape[0]
    n = len(samples)
    reg_sum = 0.0
    angle_sum = 0.0
    cls_sum = 0.0
    for s in samples:
        if s.class_logits.shape[0] != n_classes:
            raise InvalidInputError("all samples must share the class count")
        cls_target = np.zeros(n_classes)
        if s.objectness == 1:
            cls_target[s.class_label] = 1.0
        cls_sum += float(binary_focal_loss(
            cls_target, s.class_logits,
            loss_config.focal_alpha, loss_config.focal_gamma).sum())
        if s.objectness == 1:
            reg_sum += smooth_l1(s.box_pred, box_offsets(s.gt_box, s.anchor),
                                 loss_config.smooth_l1_beta)
            angle_sum += dcl_loss(s.gt_box.theta, s.angle_logits, table,
                                  weight_config, loss_config,
                                  h_gt=s.gt_box.h, w_gt=s.gt_box.w)
    reg_term = loss_config.lambda_reg * reg_sum / n
    angle_term = loss_config.lambda_angle * angle_sum / n
    cls_term = loss_config.lambda_cls * cls_sum / n
    return MultiTaskLoss(reg_term + angle_term + cls_term,
                         reg_term, angle_term, cls_term)
