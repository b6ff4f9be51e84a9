"""Evaluation protocols: IoU-threshold 3D AP and the open detection score.

Two matching criteria are supported: oriented-cuboid IoU at a threshold, and
3D center distance at a fraction of the ground-truth box radius. Matching is
greedy in descending score order (ties broken by ascending input index), each
ground truth claimed at most once. AP uses 101-point interpolated precision by
default. The open detection score combines the distance-matched AP with
normalized true-positive errors:

    ODS = (3 * AP_dist + (1 - mATE) + (1 - mASE) + (1 - mAOE)) / 6
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry
from .errors import EmptyGroundTruth, MixedFrames, NoGroundTruth, OutOfRange
from .geometry import Box2D, Box3D, center_distance, geodesic_angle, gt_radius, iou3d


@dataclass(frozen=True)
class Detection:
    frame_id: str
    label: str
    score: float
    box3d: Box3D
    box2d: Optional[Box2D] = None

    def __post_init__(self):
        if not (np.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroundTruth:
    frame_id: str
    label: str
    box3d: Box3D


def _default_iou_thresholds():
    return [round(0.05 * i, 2) for i in range(1, 11)]


def _default_dist_thresholds():
    return [round(0.50 + 0.05 * i, 2) for i in range(11)]


@dataclass
class MetricConfig:
    iou_thresholds: list = field(default_factory=_default_iou_thresholds)
    dist_ratio_thresholds: list = field(default_factory=_default_dist_thresholds)
    tp_error_threshold_ratio: float = 1.0
    recall_points: int = 101
    base_classes: Optional[list] = None
    novel_classes: Optional[list] = None
    ap_interpolation: str = "101point"  # or "trapezoid"
    radius_mode: str = "circumscribed"

    def __post_init__(self):
        for name, ts in (("iou", self.iou_thresholds), ("dist", self.dist_ratio_thresholds)):
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError(f"{name} thresholds must be strictly increasing")
        if not 0.0 < self.tp_error_threshold_ratio <= 1.0:
            raise ValueError("tp_error_threshold_ratio must be in (0, 1]")
        if self.ap_interpolation not in ("101point", "trapezoid"):
            raise ValueError(f"unknown interpolation {self.ap_interpolation!r}")


@dataclass(frozen=True)
class IoUCriterion:
    threshold: float

    def affinity(self, det, gt):
        return iou3d(det.box3d, gt.box3d)

    def passes(self, affinity, gt):
        return affinity >= self.threshold


@dataclass(frozen=True)
class DistCriterion:
    ratio: float
    radius_mode: str = "circumscribed"

    def affinity(self, det, gt):
        # negated so that larger affinity always means a better match
        return -center_distance(det.box3d, gt.box3d)

    def passes(self, affinity, gt):
        return -affinity <= self.ratio * gt_radius(gt.box3d, self.radius_mode)


@dataclass
class MatchResult:
    pairs: list  # (det_index, gt_index, affinity)
    unmatched_dets: list
    unmatched_gts: list


def match_frame(dets, gts, criterion):
    """Greedy score-descending matching within one frame and class."""
    keys = {d.frame_id for d in dets} | {gt.frame_id for gt in gts}
    labels = {d.label for d in dets} | {gt.label for gt in gts}
    if len(keys) > 1 or len(labels) > 1:
        raise MixedFrames(f"inputs span frames {sorted(keys)} / classes {sorted(labels)}")
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    gt_taken = [False] * len(gts)
    pairs = []
    unmatched_dets = []
    for di in order:
        best_gi, best_aff = -1, -np.inf
        for gi, gt in enumerate(gts):
            if gt_taken[gi]:
                continue
            aff = criterion.affinity(dets[di], gt)
            if criterion.passes(aff, gt) and aff > best_aff:
                best_gi, best_aff = gi, aff
        if best_gi >= 0:
            gt_taken[best_gi] = True
            pairs.append((di, best_gi, best_aff))
        else:
            unmatched_dets.append(di)
    unmatched_gts = [gi for gi, taken in enumerate(gt_taken) if not taken]
    return MatchResult(pairs=pairs, unmatched_dets=unmatched_dets, unmatched_gts=unmatched_gts)


def pr_curve(scores, is_tp, n_gt):
    """Precision/recall arrays from pooled detections of one class.

    scores and is_tp are parallel arrays over all detections of the class,
    pooled over frames; ordering follows descending score with ties broken by
    input index (stable sort).
    """
    if n_gt <= 0:
        raise NoGroundTruth("class has no ground truth")
    scores = np.asarray(scores, dtype=float)
    is_tp = np.asarray(is_tp, dtype=bool)
    order = np.argsort(-scores, kind="stable")
    tp = np.cumsum(is_tp[order])
    fp = np.cumsum(~is_tp[order])
    precision = tp / np.maximum(tp + fp, 1)
    recall = tp / n_gt
    return precision, recall


def average_precision(precision, recall, cfg):
    """AP from a PR curve, 101-point interpolated or raw trapezoid."""
    if len(precision) == 0:
        return 0.0
    if cfg.ap_interpolation == "101point":
        # interpolated precision: max precision at any recall >= r
        interp = np.maximum.accumulate(precision[::-1])[::-1]
        grid = np.linspace(0.0, 1.0, cfg.recall_points)
        # 1e-9 slack absorbs division rounding in recall = tp / n_gt;
        # distinct recall values differ by at least 1 / n_gt
        idx = np.searchsorted(recall, grid - 1e-9, side="left")
        vals = np.where(idx < len(interp), interp[np.minimum(idx, len(interp) - 1)], 0.0)
        return float(vals.mean())
    r = np.concatenate([[0.0], recall])
    p = np.concatenate([[precision[0]], precision])
    return float(np.trapz(p, r))


def _group(items):
    groups = {}
    for i, item in enumerate(items):
        groups.setdefault((item.label, item.frame_id), []).append(item)
    return groups


def _class_ap(dets_by_frame, gts_by_frame, n_gt, criterion, cfg):
    """Pooled AP of one class under one criterion, plus TP/FP counts."""
    scores, is_tp = [], []
    tp_pairs = []
    frames = sorted(set(dets_by_frame) | set(gts_by_frame))
    for fid in frames:
        dets = dets_by_frame.get(fid, [])
        gts = gts_by_frame.get(fid, [])
        res = match_frame(dets, gts, criterion)
        matched = {di for di, _, _ in res.pairs}
        for di, d in enumerate(dets):
            scores.append(d.score)
            is_tp.append(di in matched)
        for di, gi, _ in res.pairs:
            tp_pairs.append((dets[di], gts[gi]))
    precision, recall = pr_curve(scores, is_tp, n_gt)
    ap = average_precision(precision, recall, cfg)
    n_tp = int(np.sum(is_tp))
    return ap, n_tp, len(scores) - n_tp, n_gt - n_tp, tp_pairs, (precision, recall)


def scale_error(pred_box, gt_box):
    """1 - IoU after aligning centers and rotation.

    With centers and rotations aligned the boxes are co-axial cuboids, so the
    IoU depends only on the dimensions and has the closed form below (exact,
    unlike running the polytope clipper on coincident faces).
    """
    inter = float(np.prod(np.minimum(pred_box.dims, gt_box.dims)))
    union = pred_box.volume + gt_box.volume - inter
    return 1.0 - inter / union


def tp_errors(pairs, ratio, radius_mode="circumscribed"):
    """(ATE, ASE, AOE) lists for matched (det, gt) pairs at the given ratio."""
    ate, ase, aoe = [], [], []
    for det, gt in pairs:
        dist = center_distance(det.box3d, gt.box3d)
        ate.append(min(dist / (ratio * gt_radius(gt.box3d, radius_mode)), 1.0))
        ase.append(scale_error(det.box3d, gt.box3d))
        aoe.append(geodesic_angle(det.box3d.rotation, gt.box3d.rotation) / np.pi)
    return ate, ase, aoe


def ods(ap_dist, mate, mase, maoe):
    """Open detection score from its four components, all in [0, 1]."""
    for name, v in (("ap_dist", ap_dist), ("mATE", mate), ("mASE", mase), ("mAOE", maoe)):
        if not (np.isfinite(v) and 0.0 <= v <= 1.0):
            raise OutOfRange(f"{name} = {v} outside [0, 1]")
    return (3.0 * ap_dist + (1.0 - mate) + (1.0 - mase) + (1.0 - maoe)) / 6.0


@dataclass
class ClassMetrics:
    label: str
    n_gt: int
    ap_iou: float
    ap_dist: float
    ap_iou_per_threshold: dict
    ap_dist_per_threshold: dict
    ate: float
    ase: float
    aoe: float
    n_tp: int
    n_fp: int
    n_fn: int


@dataclass
class MetricReport:
    per_class: dict  # label -> ClassMetrics
    ap_iou: float
    ap_dist: float
    mate: float
    mase: float
    maoe: float
    ods: float
    ods_base: Optional[float]
    ods_novel: Optional[float]

    def to_dict(self):
        d = {
            "aggregate": {
                "ap_iou": self.ap_iou,
                "ap_dist": self.ap_dist,
                "mate": self.mate,
                "mase": self.mase,
                "maoe": self.maoe,
                "ods": self.ods,
                "ods_base": self.ods_base,
                "ods_novel": self.ods_novel,
            },
            "per_class": {},
        }
        for label in sorted(self.per_class):
            c = self.per_class[label]
            d["per_class"][label] = {
                "n_gt": c.n_gt,
                "ap_iou": c.ap_iou,
                "ap_dist": c.ap_dist,
                "ap_iou_per_threshold": {str(k): v for k, v in c.ap_iou_per_threshold.items()},
                "ap_dist_per_threshold": {str(k): v for k, v in c.ap_dist_per_threshold.items()},
                "ate": c.ate,
                "ase": c.ase,
                "aoe": c.aoe,
                "n_tp": c.n_tp,
                "n_fp": c.n_fp,
                "n_fn": c.n_fn,
            }
        return d


def _evaluate_class(label, dets, gts, cfg):
    dets_by_frame = {}
    for d in sorted(dets, key=lambda d: d.frame_id):
        dets_by_frame.setdefault(d.frame_id, []).append(d)
    gts_by_frame = {}
    for gt in gts:
        gts_by_frame.setdefault(gt.frame_id, []).append(gt)
    n_gt = len(gts)

    ap_iou_t = {}
    for tau in cfg.iou_thresholds:
        ap, *_ = _class_ap(dets_by_frame, gts_by_frame, n_gt, IoUCriterion(tau), cfg)
        ap_iou_t[tau] = ap
    ap_dist_t = {}
    counts = None
    for ratio in cfg.dist_ratio_thresholds:
        crit = DistCriterion(ratio, cfg.radius_mode)
        ap, n_tp, n_fp, n_fn, _, _ = _class_ap(dets_by_frame, gts_by_frame, n_gt, crit, cfg)
        ap_dist_t[ratio] = ap
        if ratio == cfg.dist_ratio_thresholds[-1]:
            counts = (n_tp, n_fp, n_fn)

    crit = DistCriterion(cfg.tp_error_threshold_ratio, cfg.radius_mode)
    _, _, _, _, pairs, _ = _class_ap(dets_by_frame, gts_by_frame, n_gt, crit, cfg)
    if pairs:
        ate, ase, aoe = tp_errors(pairs, cfg.tp_error_threshold_ratio, cfg.radius_mode)
        cls_ate, cls_ase, cls_aoe = float(np.mean(ate)), float(np.mean(ase)), float(np.mean(aoe))
    else:
        cls_ate = cls_ase = cls_aoe = 1.0  # zero-TP convention

    return ClassMetrics(
        label=label,
        n_gt=n_gt,
        ap_iou=float(np.mean(list(ap_iou_t.values()))),
        ap_dist=float(np.mean(list(ap_dist_t.values()))),
        ap_iou_per_threshold=ap_iou_t,
        ap_dist_per_threshold=ap_dist_t,
        ate=cls_ate,
        ase=cls_ase,
        aoe=cls_aoe,
        n_tp=counts[0],
        n_fp=counts[1],
        n_fn=counts[2],
    )


def _mean_over(per_class, labels, attr):
    vals = [getattr(per_class[lb], attr) for lb in labels]
    return float(np.mean(vals))


def _subset_ods(per_class, subset):
    labels = sorted(set(per_class) & set(subset))
    if not labels:
        return None
    return ods(
        _mean_over(per_class, labels, "ap_dist"),
        _mean_over(per_class, labels, "ate"),
        _mean_over(per_class, labels, "ase"),
        _mean_over(per_class, labels, "aoe"),
    )


def evaluate(gts, dets, cfg=None, threads=1):
    """Full evaluation: both AP protocols, TP errors, and ODS.

    Only classes present in the ground truth are evaluated; detections of
    absent classes are ignored. The reduction order is fixed (sorted class
    names), so the report is identical for any thread count.
    """
    cfg = cfg or MetricConfig()
    if not gts:
        raise EmptyGroundTruth("no ground-truth boxes")
    labels = sorted({gt.label for gt in gts})
    dets_by_label = {lb: [] for lb in labels}
    for d in dets:
        if d.label in dets_by_label:
            dets_by_label[d.label].append(d)
    gts_by_label = {lb: [] for lb in labels}
    for gt in gts:
        gts_by_label[gt.label].append(gt)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                lb: pool.submit(_evaluate_class, lb, dets_by_label[lb], gts_by_label[lb], cfg)
                for lb in labels
            }
            per_class = {lb: futures[lb].result() for lb in labels}
    else:
        per_class = {
            lb: _evaluate_class(lb, dets_by_label[lb], gts_by_label[lb], cfg) for lb in labels
        }

    ap_dist = _mean_over(per_class, labels, "ap_dist")
    mate = _mean_over(per_class, labels, "ate")
    mase = _mean_over(per_class, labels, "ase")
    maoe = _mean_over(per_class, labels, "aoe")
    return MetricReport(
        per_class=per_class,
        ap_iou=_mean_over(per_class, labels, "ap_iou"),
        ap_dist=ap_dist,
        mate=mate,
        mase=mase,
        maoe=maoe,
        ods=ods(ap_dist, mate, mase, maoe),
        ods_base=_subset_ods(per_class, cfg.base_classes) if cfg.base_classes else None,
        ods_novel=_subset_ods(per_class, cfg.novel_classes) if cfg.novel_classes else None,
    )


def ap_iou(gts, dets, cfg=None):
    """Mean AP over IoU thresholds, averaged over classes."""
    return evaluate(gts, dets, cfg).ap_iou


def ap_dist(gts, dets, cfg=None):
    """Mean AP over distance-ratio thresholds, averaged over classes."""
    return evaluate(gts, dets, cfg).ap_dist
