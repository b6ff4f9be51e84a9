"""Canonical image space transform and the 12-parameter 2D-to-3D decode.

The decode takes (u_off, v_off, d_log, dims_log[3], rot6d[6]) together with a
2D box and intrinsics and produces an oriented 3D box. All decode steps are
closed-form, so the full Jacobian is available analytically.
"""

from dataclasses import dataclass

import numpy as np

from .errors import Overflow
from .geometry import (
    Box3D,
    CameraIntrinsics,
    Rot6D,
    matrix_to_axis_angle,
    rot6d_to_matrix,
    unproject,
)

DEFAULT_CANON_HEIGHT = 800
DEFAULT_CANON_WIDTH = 1333


@dataclass(frozen=True)
class CanonicalConfig:
    canon_height: int = DEFAULT_CANON_HEIGHT
    canon_width: int = DEFAULT_CANON_WIDTH
    pad_value: float = 0.0

    def __post_init__(self):
        if self.canon_height <= 0 or self.canon_width <= 0:
            raise ValueError("canonical size must be positive")


@dataclass(frozen=True)
class CanonicalTransform:
    """Resize-then-center-pad mapping from source pixels to canonical pixels."""

    scale: float
    pad_left: float
    pad_top: float
    source_width: int
    source_height: int

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.pad_left < 0 or self.pad_top < 0:
            raise ValueError("pads must be non-negative")


@dataclass(frozen=True)
class LiftScales:
    s_depth: float = 1.0
    s_dim: float = 1.0

    def __post_init__(self):
        if self.s_depth <= 0 or self.s_dim <= 0:
            raise ValueError("scales must be positive")


@dataclass(frozen=True)
class LiftParams:
    """The 12 decoded head outputs for one detection."""

    u_off: float
    v_off: float
    d_log: float
    dims_log: np.ndarray
    rot6d: Rot6D

    def __post_init__(self):
        d = np.array(self.dims_log, dtype=float)
        if d.shape != (3,):
            raise ValueError("dims_log must have 3 components")
        d.flags.writeable = False
        object.__setattr__(self, "dims_log", d)
        vals = np.concatenate([[self.u_off, self.v_off, self.d_log], d, self.rot6d.as_array()])
        if not np.isfinite(vals).all():
            raise ValueError("lift parameters must be finite")

    def as_array(self):
        return np.concatenate(
            [[self.u_off, self.v_off, self.d_log], self.dims_log, self.rot6d.as_array()]
        )

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(
            u_off=float(x[0]),
            v_off=float(x[1]),
            d_log=float(x[2]),
            dims_log=x[3:6],
            rot6d=Rot6D(a=x[6:9], b=x[9:12]),
        )


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def canonicalize(K, cfg=CanonicalConfig()):
    """Resize-and-center-pad intrinsics into the canonical image space."""
    scale = min(cfg.canon_width / K.width, cfg.canon_height / K.height)
    resized_w = _round_half_up(scale * K.width)
    resized_h = _round_half_up(scale * K.height)
    pad_left = (cfg.canon_width - resized_w) // 2
    pad_top = (cfg.canon_height - resized_h) // 2
    transform = CanonicalTransform(
        scale=scale,
        pad_left=pad_left,
        pad_top=pad_top,
        source_width=K.width,
        source_height=K.height,
    )
    K_canon = CameraIntrinsics(
        fx=K.fx * scale,
        fy=K.fy * scale,
        cx=K.cx * scale + pad_left,
        cy=K.cy * scale + pad_top,
        width=cfg.canon_width,
        height=cfg.canon_height,
    )
    return transform, K_canon


def apply_transform(pixel, t):
    p = np.asarray(pixel, dtype=float)
    return t.scale * p + np.array([t.pad_left, t.pad_top])


def invert_transform(pixel, t):
    p = np.asarray(pixel, dtype=float)
    return (p - np.array([t.pad_left, t.pad_top])) / t.scale


def decode_depth(d_log, s=LiftScales()):
    with np.errstate(over="ignore"):
        z = np.exp(d_log / s.s_depth)
    if not np.isfinite(z):
        raise Overflow(f"decoded depth from d_log={d_log} is not finite")
    return float(z)


def decode_dims(dims_log, s=LiftScales()):
    d = np.exp(np.asarray(dims_log, dtype=float) / s.s_dim)
    if not np.isfinite(d).all():
        raise Overflow(f"decoded dims from {dims_log} are not finite")
    return d


def encode_depth(z, s=LiftScales()):
    return float(np.log(z) * s.s_depth)


def encode_dims(dims, s=LiftScales()):
    return np.log(np.asarray(dims, dtype=float)) * s.s_dim


def lift(params, box2d, K, s=LiftScales()):
    """Decode the 12 head outputs plus a 2D box into an oriented 3D box."""
    proj_center = box2d.center + np.array([params.u_off, params.v_off])
    z = decode_depth(params.d_log, s)
    center = unproject(proj_center, z, K)
    dims = decode_dims(params.dims_log, s)
    rotation = rot6d_to_matrix(params.rot6d)
    return Box3D(center=center, dims=dims, rotation=rotation)


def lift_output(params, box2d, K, s=LiftScales()):
    """The lifted box as a 9-vector: center, dims, rotation axis-angle."""
    box = lift(params, box2d, K, s)
    return np.concatenate([box.center, box.dims, matrix_to_axis_angle(box.rotation)])


def _skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


def _rot6d_matrix_jacobian(r):
    """d vec(R) / d (a, b), 9x6 with vec row-major."""
    a = np.asarray(r.a, dtype=float)
    b = np.asarray(r.b, dtype=float)
    na = np.linalg.norm(a)
    c1 = a / na
    dc1_da = (np.eye(3) - np.outer(c1, c1)) / na
    u = b - (b @ c1) * c1
    nu = np.linalg.norm(u)
    c2 = u / nu
    du_da = -(np.outer(c1, b) + (b @ c1) * np.eye(3)) @ dc1_da
    du_db = np.eye(3) - np.outer(c1, c1)
    dc2_du = (np.eye(3) - np.outer(c2, c2)) / nu
    dc2_da = dc2_du @ du_da
    dc2_db = dc2_du @ du_db
    dc3_da = -_skew(c2) @ dc1_da + _skew(c1) @ dc2_da
    dc3_db = _skew(c1) @ dc2_db
    J = np.zeros((9, 6))
    for i in range(3):
        # row-major vec: R[i, j] is entry 3*i + j; columns of R are c1, c2, c3
        J[3 * i + 0, 0:3] = dc1_da[i]
        J[3 * i + 1, 0:3] = dc2_da[i]
        J[3 * i + 1, 3:6] = dc2_db[i]
        J[3 * i + 2, 0:3] = dc3_da[i]
        J[3 * i + 2, 3:6] = dc3_db[i]
    return J


def _axis_angle_matrix_jacobian(R):
    """d (axis-angle of R) / d vec(R), 3x9 with vec row-major.

    Singular at angle pi; callers must stay away from that chart boundary.
    """
    R = np.asarray(R, dtype=float)
    t = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(t)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < 1e-4:
        s = 0.5 + theta * theta / 12.0
        c_tr = -1.0 / 12.0
    else:
        sin_t = np.sin(theta)
        s = theta / (2.0 * sin_t)
        c_tr = -(sin_t - theta * np.cos(theta)) / (4.0 * sin_t**3)
    J = np.zeros((3, 9))
    # d v / d vec(R): each component is a difference of two entries
    dv = np.zeros((3, 9))
    dv[0, 3 * 2 + 1] = 1.0
    dv[0, 3 * 1 + 2] = -1.0
    dv[1, 3 * 0 + 2] = 1.0
    dv[1, 3 * 2 + 0] = -1.0
    dv[2, 3 * 1 + 0] = 1.0
    dv[2, 3 * 0 + 1] = -1.0
    trace_mask = np.zeros(9)
    trace_mask[[0, 4, 8]] = 1.0
    J = s * dv + np.outer(c_tr * v, trace_mask)
    return J


def lift_jacobian(params, box2d, K, s=LiftScales()):
    """Analytic 9x12 Jacobian of lift_output w.r.t. the 12 head outputs.

    Rows: center x, y, z; dims w, l, h; rotation axis-angle (3).
    Columns: u_off, v_off, d_log, dims_log (3), rot6d a (3), rot6d b (3).
    """
    z = decode_depth(params.d_log, s)
    u, v = box2d.center + np.array([params.u_off, params.v_off])
    dims = decode_dims(params.dims_log, s)
    J = np.zeros((9, 12))
    # center = ((u - cx) z / fx, (v - cy) z / fy, z)
    J[0, 0] = z / K.fx
    J[1, 1] = z / K.fy
    J[0, 2] = (u - K.cx) * z / (K.fx * s.s_depth)
    J[1, 2] = (v - K.cy) * z / (K.fy * s.s_depth)
    J[2, 2] = z / s.s_depth
    for i in range(3):
        J[3 + i, 3 + i] = dims[i] / s.s_dim
    R = rot6d_to_matrix(params.rot6d)
    J[6:9, 6:12] = _axis_angle_matrix_jacobian(R) @ _rot6d_matrix_jacobian(params.rot6d)
    return J
