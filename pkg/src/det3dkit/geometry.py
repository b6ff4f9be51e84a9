"""Core 3D/2D primitives: pinhole camera, rotations, oriented cuboids.

Camera convention: +x right, +y down, +z forward; pixel (u, v) with u along
image width. All lengths are meters, pixels are reals, angles are radians.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBox, DegenerateInput, NonPositiveDepth

ORTHO_TOL = 1e-9
_PARALLEL_EPS = 1e-12
_PLANE_EPS = 1e-12


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters tied to an image size."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if not (np.isfinite(self.cx) and np.isfinite(self.cy)):
            raise ValueError("principal point must be finite")


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned pixel-space box with x2 >= x1 and y2 >= y1."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"inverted box: ({self.x1},{self.y1},{self.x2},{self.y2})")

    @property
    def center(self):
        return np.array([0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2)])

    @property
    def width(self):
        return self.x2 - self.x1

    @property
    def height(self):
        return self.y2 - self.y1

    @property
    def area(self):
        return self.width * self.height


def _as_readonly(a, shape):
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


def check_rotation(matrix, tol=ORTHO_TOL):
    """Raise ValueError unless matrix is in SO(3) within tol."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("rotation has non-finite entries")
    err = np.abs(m.T @ m - np.eye(3)).max()
    if err > tol:
        raise ValueError(f"matrix not orthonormal: |R^T R - I| = {err:.3e}")
    det = np.linalg.det(m)
    if abs(det - 1.0) > tol:
        raise ValueError(f"matrix has det {det}, expected +1")


@dataclass(frozen=True)
class Rot6D:
    """Two 3-vectors, the unnormalized first two columns of a rotation."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _as_readonly(self.a, (3,)))
        object.__setattr__(self, "b", _as_readonly(self.b, (3,)))

    def as_array(self):
        return np.concatenate([self.a, self.b])


@dataclass(frozen=True)
class Box3D:
    """Oriented cuboid: center (camera frame), dims (w, l, h), rotation."""

    center: np.ndarray
    dims: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "center", _as_readonly(self.center, (3,)))
        object.__setattr__(self, "dims", _as_readonly(self.dims, (3,)))
        rot = _as_readonly(self.rotation, (3, 3))
        object.__setattr__(self, "rotation", rot)
        if not np.isfinite(self.center).all():
            raise ValueError("center has non-finite entries")
        if not (np.isfinite(self.dims).all() and (self.dims > 0).all()):
            raise DegenerateBox(f"dims must be positive and finite, got {self.dims}")
        check_rotation(rot)

    @property
    def volume(self):
        return float(np.prod(self.dims))


def project(point, K):
    """Project a camera-frame point to pixel coordinates."""
    p = np.asarray(point, dtype=float)
    if p[2] <= 0:
        raise NonPositiveDepth(f"point depth {p[2]} <= 0")
    return np.array([K.fx * p[0] / p[2] + K.cx, K.fy * p[1] / p[2] + K.cy])


def unproject(pixel, depth, K):
    """Back-project a pixel at the given metric depth into the camera frame."""
    if depth <= 0:
        raise NonPositiveDepth(f"depth {depth} <= 0")
    u, v = float(pixel[0]), float(pixel[1])
    return np.array([(u - K.cx) * depth / K.fx, (v - K.cy) * depth / K.fy, depth])


def rot6d_to_matrix(r):
    """Gram-Schmidt a 6D rotation parameterization into an SO(3) matrix."""
    a = np.asarray(r.a, dtype=float)
    b = np.asarray(r.b, dtype=float)
    na = np.linalg.norm(a)
    if na < _PARALLEL_EPS:
        raise DegenerateInput("first 6D vector is (near) zero")
    c1 = a / na
    u = b - (b @ c1) * c1
    nu = np.linalg.norm(u)
    if nu < _PARALLEL_EPS:
        raise DegenerateInput("6D vectors are (near) parallel")
    c2 = u / nu
    c3 = np.cross(c1, c2)
    return np.stack([c1, c2, c3], axis=1)


def matrix_to_rot6d(R):
    """Inverse of rot6d_to_matrix: read off the first two columns."""
    R = np.asarray(R, dtype=float)
    return Rot6D(a=R[:, 0], b=R[:, 1])


def geodesic_angle(R1, R2):
    """SO(3) distance between two rotations, in [0, pi]."""
    R1, R2 = np.asarray(R1), np.asarray(R2)
    if np.array_equal(R1, R2):
        # bitwise-equal inputs must give exactly zero; the trace formula
        # amplifies last-ulp noise to ~1e-8 near the identity
        return 0.0
    t = (np.trace(np.asarray(R1).T @ np.asarray(R2)) - 1.0) / 2.0
    return float(np.arccos(np.clip(t, -1.0, 1.0)))


# Local corner offsets in units of half-dims; x varies fastest, then y, then z,
# so corner i has signs (bit0 -> x, bit1 -> y, bit2 -> z) with 0 = negative.
_CORNER_SIGNS = np.array(
    [[(-1) ** (1 - ((i >> k) & 1)) for k in range(3)] for i in range(8)], dtype=float
)

# Quad faces over the corner indices above, wound so normals point outward.
_FACES = (
    (0, 4, 6, 2),  # -x
    (1, 3, 7, 5),  # +x
    (0, 1, 5, 4),  # -y
    (2, 6, 7, 3),  # +y
    (0, 2, 3, 1),  # -z
    (4, 5, 7, 6),  # +z
)


def corners(box):
    """The 8 corners of a box, in the documented fixed order."""
    local = _CORNER_SIGNS * (0.5 * box.dims)
    return box.center + local @ box.rotation.T


def _halfspaces(box):
    """The 6 (normal, offset) pairs with inside = {x : n.x <= d}."""
    out = []
    for k in range(3):
        n = box.rotation[:, k]
        c = float(n @ box.center)
        h = 0.5 * box.dims[k]
        out.append((n, c + h))
        out.append((-n, -c + h))
    return out


def _clip_faces(faces, normal, offset, eps=_PLANE_EPS):
    """Clip a convex polytope (list of outward-wound faces) by one half-space.

    Ties (|n.x - d| <= eps) count as inside. Returns the new face list,
    including the planar cap face when the plane cuts the polytope.
    """
    new_faces = []
    cut = []
    for face in faces:
        dist = [float(normal @ v) - offset for v in face]
        if all(d <= eps for d in dist):
            new_faces.append(face)
            continue
        if all(d > eps for d in dist):
            continue
        poly = []
        n = len(face)
        for i in range(n):
            d0, d1 = dist[i], dist[(i + 1) % n]
            in0, in1 = d0 <= eps, d1 <= eps
            if in0:
                poly.append(face[i])
            if in0 != in1:
                t = d0 / (d0 - d1)
                p = face[i] + t * (face[(i + 1) % n] - face[i])
                poly.append(p)
                cut.append(p)
        if len(poly) >= 3:
            new_faces.append(np.asarray(poly))
    cap = _cap_face(cut, normal)
    if cap is not None:
        new_faces.append(cap)
    return new_faces


def _cap_face(points, normal):
    """Order cut points into a cap polygon whose outward normal is +normal."""
    if len(points) < 3:
        return None
    pts = [points[0]]
    for p in points[1:]:
        if all(np.linalg.norm(p - q) > 1e-9 for q in pts):
            pts.append(p)
    if len(pts) < 3:
        return None
    pts = np.asarray(pts)
    # Basis (e1, e2) with e1 x e2 = normal, so CCW order in (e1, e2) winds
    # the cap with outward normal +normal.
    ref = np.array([1.0, 0.0, 0.0])
    if abs(normal @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(normal, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    centroid = pts.mean(axis=0)
    rel = pts - centroid
    ang = np.arctan2(rel @ e2, rel @ e1)
    return pts[np.argsort(ang)]


def _polytope_volume(faces):
    """Volume of a convex polytope given outward-wound faces (divergence thm)."""
    total = 0.0
    for face in faces:
        v0 = face[0]
        for i in range(1, len(face) - 1):
            total += float(v0 @ np.cross(face[i], face[i + 1]))
    return abs(total) / 6.0


def intersection_volume(a, b):
    """Exact intersection volume of two oriented cuboids.

    Clips the faces of cuboid a against the 6 half-spaces of cuboid b.
    """
    pts = corners(a)
    faces = [pts[list(f)] for f in _FACES]
    for normal, offset in _halfspaces(b):
        faces = _clip_faces(faces, normal, offset)
        if not faces:
            return 0.0
    return _polytope_volume(faces)


def iou3d(a, b):
    """Exact IoU of two oriented cuboids, in [0, 1]."""
    if not ((a.dims > 0).all() and (b.dims > 0).all()):
        raise DegenerateBox("boxes must have positive volume")
    inter = intersection_volume(a, b)
    union = a.volume + b.volume - inter
    return float(np.clip(inter / union, 0.0, 1.0))


def center_distance(a, b):
    """Euclidean distance between box centers (meters)."""
    return float(np.linalg.norm(a.center - b.center))


def gt_radius(box, mode="circumscribed"):
    """Radius of a box: half the space diagonal, or inscribed-sphere radius."""
    if mode == "circumscribed":
        return float(0.5 * np.linalg.norm(box.dims))
    if mode == "inscribed":
        return float(0.5 * box.dims.min())
    raise ValueError(f"unknown radius mode {mode!r}")


def matrix_to_axis_angle(R):
    """Rotation vector (axis * angle) of R, valid for angles below pi."""
    R = np.asarray(R, dtype=float)
    theta = geodesic_angle(np.eye(3), R)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < 1e-4:
        s = 0.5 + theta * theta / 12.0
    else:
        s = theta / (2.0 * np.sin(theta))
    return s * v


def axis_angle_to_matrix(phi):
    """Rodrigues formula."""
    phi = np.asarray(phi, dtype=float)
    theta = np.linalg.norm(phi)
    if theta < 1e-12:
        return np.eye(3)
    k = phi / theta
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(theta) * K + (1 - np.cos(theta)) * (K @ K)
