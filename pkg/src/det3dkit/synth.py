"""Seeded synthetic scenes and noisy predictions for metric validation.

Generation uses counter-based Philox streams keyed on (seed, frame index), so
output is identical no matter how frames are scheduled across threads.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidSpec
from .geometry import Box2D, Box3D, CameraIntrinsics, axis_angle_to_matrix, project, unproject
from .metrics import Detection, GroundTruth


@dataclass(frozen=True)
class ClassSpec:
    name: str
    dims_log_mean: tuple  # per-axis mean of log dims (w, l, h)
    dims_log_std: tuple = (0.0, 0.0, 0.0)

    @classmethod
    def fixed(cls, name, dims):
        return cls(name=name, dims_log_mean=tuple(np.log(dims)))


@dataclass
class SceneSpec:
    n_frames: int = 20
    boxes_per_frame: int = 8
    classes: list = field(default_factory=lambda: [ClassSpec.fixed("box", (1.0, 1.0, 1.0))])
    depth_range: tuple = (4.0, 30.0)
    intrinsics: CameraIntrinsics = field(
        default_factory=lambda: CameraIntrinsics(
            fx=1000.0, fy=1000.0, cx=666.5, cy=400.0, width=1333, height=800
        )
    )
    seed: int = 0

    def validate(self):
        if self.n_frames < 0 or self.boxes_per_frame <= 0:
            raise InvalidSpec("counts must be positive (n_frames may be 0)")
        if not self.classes:
            raise InvalidSpec("at least one class required")
        if not 0 < self.depth_range[0] < self.depth_range[1]:
            raise InvalidSpec(f"bad depth range {self.depth_range}")


@dataclass
class PerturbModel:
    sigma_t: float = 0.0
    sigma_s: float = 0.0
    sigma_r: float = 0.0
    p_miss: float = 0.0
    fp_rate: float = 0.0
    seed: int = 0

    def validate(self):
        if min(self.sigma_t, self.sigma_s, self.sigma_r, self.fp_rate) < 0:
            raise InvalidSpec("noise parameters must be non-negative")
        if not 0.0 <= self.p_miss <= 1.0:
            raise InvalidSpec(f"p_miss {self.p_miss} outside [0, 1]")


def _frame_rng(seed, frame_index, stream):
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, (stream << 32) | frame_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _random_rotation(rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return axis_angle_to_matrix(axis * rng.uniform(0.0, np.pi * 0.9))


def frame_id(index):
    return f"frame_{index:05d}"


def generate(spec):
    """Ground-truth boxes plus per-frame intrinsics; deterministic per seed."""
    spec.validate()
    K = spec.intrinsics
    gts = []
    intrinsics = {}
    for fi in range(spec.n_frames):
        rng = _frame_rng(spec.seed, fi, stream=0)
        fid = frame_id(fi)
        intrinsics[fid] = K
        for _ in range(spec.boxes_per_frame):
            cls = spec.classes[rng.integers(len(spec.classes))]
            dims = np.exp(
                np.asarray(cls.dims_log_mean) + rng.normal(size=3) * np.asarray(cls.dims_log_std)
            )
            u = rng.uniform(0.1 * K.width, 0.9 * K.width)
            v = rng.uniform(0.1 * K.height, 0.9 * K.height)
            z = rng.uniform(*spec.depth_range)
            center = unproject((u, v), z, K)
            box = Box3D(center=center, dims=dims, rotation=_random_rotation(rng))
            gts.append(GroundTruth(frame_id=fid, label=cls.name, box3d=box))
    return gts, intrinsics


def _detection_box2d(box3d, K):
    try:
        u, v = project(box3d.center, K)
    except Exception:
        return None
    return Box2D(u - 10, v - 10, u + 10, v + 10)


def perturb(gts, model, intrinsics=None):
    """Noisy detections from ground truth; deterministic per seed.

    Scores decay with the actual center error (exp(-err / sigma_t)) so that
    precision-recall curves are non-degenerate; with sigma_t = 0 every
    surviving detection gets score 0.5. False positives are drawn uniformly
    inside the frame's ground-truth bounding volume expanded by 2 m.
    """
    model.validate()
    by_frame = {}
    for gt in gts:
        by_frame.setdefault(gt.frame_id, []).append(gt)
    dets = []
    for fi, fid in enumerate(sorted(by_frame)):
        rng = _frame_rng(model.seed, fi, stream=1)
        frame_gts = by_frame[fid]
        for gt in frame_gts:
            miss = rng.random() < model.p_miss
            noise_t = rng.normal(size=3) * model.sigma_t
            noise_s = rng.normal(size=3) * model.sigma_s
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = abs(rng.normal()) * model.sigma_r
            if miss:
                continue
            center = gt.box3d.center + noise_t
            dims = gt.box3d.dims * np.exp(noise_s)
            rotation = axis_angle_to_matrix(axis * angle) @ gt.box3d.rotation
            err = float(np.linalg.norm(noise_t))
            if model.sigma_t > 0:
                score = float(np.clip(np.exp(-err / model.sigma_t), 0.0, 1.0))
            else:
                score = 0.5
            box2d = _detection_box2d(gt.box3d, intrinsics[fid]) if intrinsics else None
            dets.append(
                Detection(
                    frame_id=fid,
                    label=gt.label,
                    score=score,
                    box3d=Box3D(center=center, dims=dims, rotation=rotation),
                    box2d=box2d,
                )
            )
        n_fp = rng.poisson(model.fp_rate)
        if n_fp > 0:
            centers = np.array([gt.box3d.center for gt in frame_gts])
            lo, hi = centers.min(axis=0) - 2.0, centers.max(axis=0) + 2.0
            mean_dims = np.array([gt.box3d.dims for gt in frame_gts]).mean(axis=0)
            labels = sorted({gt.label for gt in frame_gts})
            for _ in range(n_fp):
                center = rng.uniform(lo, hi)
                dims = mean_dims * np.exp(rng.normal(size=3) * 0.1)
                dets.append(
                    Detection(
                        frame_id=fid,
                        label=labels[rng.integers(len(labels))],
                        score=float(rng.uniform(0.0, 0.3)),
                        box3d=Box3D(center=center, dims=dims, rotation=_random_rotation(rng)),
                    )
                )
    return dets


def thin_box_spec(seed=0, n_frames=30):
    """Fixture class whose IoU matching collapses under modest center noise."""
    return SceneSpec(
        n_frames=n_frames,
        boxes_per_frame=6,
        classes=[ClassSpec.fixed("thin", (0.1, 2.0, 2.0))],
        seed=seed,
    )


def large_box_spec(seed=0, n_frames=30):
    """Vehicle-sized fixture class, robust to the same center noise."""
    return SceneSpec(
        n_frames=n_frames,
        boxes_per_frame=6,
        classes=[ClassSpec.fixed("vehicle", (2.0, 4.5, 1.8))],
        seed=seed,
    )
