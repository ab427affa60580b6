"""Rotated-detection evaluation: greedy matching and average precision.

Matching is VOC-style: detections are visited in order of descending
score (ties keep input order) and each one claims the highest-IoU not yet
matched ground truth of its class in its image, provided the IoU reaches
the threshold. Ground truths flagged difficult are excluded from the
positive count and detections whose only qualifying overlap is with a
difficult ground truth are ignored entirely (neither TP nor FP).
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import RotatedBoxLongSide, rotated_iou
from .validation import check_choice, check_finite_scalar

TP = 1
FP = 0
IGNORED = -1

METRICS = frozenset({"voc07", "voc12"})


@dataclass(frozen=True)
class DetectionRecord:
    """One scored detection."""

    image_id: str
    class_id: object
    score: float
    box: RotatedBoxLongSide

    def __post_init__(self):
        object.__setattr__(self, "score", check_finite_scalar(self.score, "score"))
        if not isinstance(self.box, RotatedBoxLongSide):
            raise InvalidInputError("detection box must be a RotatedBoxLongSide")


@dataclass(frozen=True)
class GroundTruthRecord:
    """One annotated box; ``difficult`` removes it from the AP denominator."""

    image_id: str
    class_id: object
    box: RotatedBoxLongSide
    difficult: bool = False

    def __post_init__(self):
        if not isinstance(self.box, RotatedBoxLongSide):
            raise InvalidInputError("ground-truth box must be a RotatedBoxLongSide")
        object.__setattr__(self, "difficult", bool(self.difficult))


@dataclass(frozen=True)
class APResult:
    """Average precision plus the raw curve it was computed from."""

    ap: float
    n_gt: int
    recalls: np.ndarray
    precisions: np.ndarray


def match_detections(detections, ground_truths, iou_threshold=0.5):
    """TP/FP/IGNORED flag for every detection, in input order.

    Args:
        detections: Sequence of DetectionRecord.
        ground_truths: Sequence of GroundTruthRecord.
        iou_threshold: Minimum IoU for a match, in (0, 1].

    Returns:
        int64 array with values TP (1), FP (0) or IGNORED (-1), aligned
        with the input detection order.
    """
    iou_threshold = check_finite_scalar(iou_threshold, "iou_threshold")
    if not 0.0 < iou_threshold <= 1.0:
        raise InvalidInputError(
            f"iou_threshold must lie in (0, 1], got {iou_threshold}")
    detections = list(detections)
    ground_truths = list(ground_truths)
    groups = {}
    for gi, gt in enumerate(ground_truths):
        groups.setdefault((gt.image_id, gt.class_id), []).append(gi)
    matched = np.zeros(len(ground_truths), dtype=bool)
    flags = np.full(len(detections), FP, dtype=np.int64)
    scores = np.array([d.score for d in detections], dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    for di in order:
        det = detections[di]
        best_iou, best_gi = 0.0, -1
        best_diff_iou = 0.0
        for gi in groups.get((det.image_id, det.class_id), ()):
            gt = ground_truths[gi]
            iou = rotated_iou(det.box, gt.box)
            if gt.difficult:
                best_diff_iou = max(best_diff_iou, iou)
            elif not matched[gi] and iou > best_iou:
                best_iou, best_gi = iou, gi
        if best_gi >= 0 and best_iou >= iou_threshold:
            flags[di] = TP
            matched[best_gi] = True
        elif best_diff_iou >= iou_threshold:
            flags[di] = IGNORED
        else:
            flags[di] = FP
    return flags


def average_precision(flags, scores, n_gt, metric="voc07"):
    """Average precision from match flags and detection scores.

    voc07 is the 11-point interpolation (recall thresholds 0, 0.1, ..., 1);
    voc12 is the area under the monotone precision envelope. Ignored
    detections are dropped before ranking.

    Args:
        flags: Per-detection values TP (1), FP (0) or IGNORED (-1).
        scores: Per-detection confidence scores, same length.
        n_gt: Number of non-difficult ground truths (>= 1).
        metric: "voc07" or "voc12".

    Returns:
        APResult; recalls/precisions follow descending-score order.
    """
    check_choice(metric, "metric", METRICS)
    flags = np.asarray(flags, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if flags.ndim != 1 or flags.shape != scores.shape:
        raise InvalidInputError("flags and scores must be 1-D and equally long")
    if not np.all(np.isin(flags, (TP, FP, IGNORED))):
        raise InvalidInputError("flags must contain only 1, 0 or -1")
    if not isinstance(n_gt, (int, np.integer)) or isinstance(n_gt, bool):
        raise InvalidInputError(f"n_gt must be an integer, got {n_gt!r}")
    if n_gt < 1:
        raise InvalidInputError("AP is undefined without positive ground truths")
    keep = flags != IGNORED
    flags = flags[keep]
    scores = scores[keep]
    order = np.argsort(-scores, kind="stable")
    tp = (flags[order] == TP).astype(np.float64)
    fp = (flags[order] == FP).astype(np.float64)
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(fp)
    recalls = tp_cum / n_gt
    precisions = tp_cum / np.maximum(tp_cum + fp_cum, np.finfo(np.float64).eps)
    if metric == "voc07":
        total = 0.0
        for t in np.arange(0.0, 1.01, 0.1):
            mask = recalls >= t - 1e-12
            total += precisions[mask].max() if mask.any() else 0.0
        ap = total / 11.0
    else:
        mrec = np.concatenate(([0.0], recalls, [1.0]))
        mpre = np.concatenate(([0.0], precisions, [0.0]))
        for i in range(mpre.size - 2, -1, -1):
            mpre[i] = max(mpre[i], mpre[i + 1])
        changed = np.where(mrec[1:] != mrec[:-1])[0]
        ap = float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))
    return APResult(ap=float(ap), n_gt=int(n_gt),
                    recalls=recalls, precisions=precisions)


@dataclass(frozen=True)
class EvalResult:
    """Per-class APs and their mean."""

    per_class: dict
    mean_ap: float
    iou_threshold: float
    metric: str


def evaluate_detections(detections, ground_truths, iou_threshold=0.5,
                        metric="voc07"):
    """Per-class AP and mAP over a full detection set.

    Classes are taken from the ground truths; classes with only difficult
    ground truths are skipped (their AP is undefined). Detections for
    unknown classes are ignored.

    Args:
        detections: Sequence of DetectionRecord.
        ground_truths: Sequence of GroundTruthRecord.
        iou_threshold: Matching threshold.
        metric: "voc07" or "voc12".

    Returns:
        EvalResult with per_class mapping class_id -> APResult.
    """
    check_choice(metric, "metric", METRICS)
    detections = list(detections)
    ground_truths = list(ground_truths)
    classes = sorted({gt.class_id for gt in ground_truths}, key=str)
    per_class = {}
    for cls in classes:
        gts_c = [g for g in ground_truths if g.class_id == cls]
        n_gt = sum(1 for g in gts_c if not g.difficult)
        if n_gt == 0:
            continue
        dets_c = [d for d in detections if d.class_id == cls]
        flags = match_detections(dets_c, gts_c, iou_threshold)
        scores = np.array([d.score for d in dets_c], dtype=np.float64)
        per_class[cls] = average_precision(flags, scores, n_gt, metric)
    if not per_class:
        raise InvalidInputError("no class has usable ground truths")
    mean_ap = float(np.mean([r.ap for r in per_class.values()]))
    return EvalResult(per_class=per_class, mean_ap=mean_ap,
                      iou_threshold=float(iou_threshold), metric=metric)
