import numpy as np
import pytest

from det3dkit.geometry import Box3D, Rot6D, rot6d_to_matrix

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional, numpy path below
    njit = None


def random_rotation(rng):
    return rot6d_to_matrix(Rot6D(a=rng.normal(size=3), b=rng.normal(size=3)))


def random_box(rng, center_scale=1.0, dim_lo=0.5, dim_hi=2.0):
    return Box3D(
        center=rng.normal(size=3) * center_scale,
        dims=rng.uniform(dim_lo, dim_hi, size=3),
        rotation=random_rotation(rng),
    )


if njit is not None:

    @njit(cache=True)
    def _count_inside(u, ca, Ra, da, cb, Rb, db):
        """Count samples u (uniform in [0,1)^3, mapped into box a) that land in box b."""
        count = 0
        hx, hy, hz = db[0] / 2, db[1] / 2, db[2] / 2
        for i in range(u.shape[0]):
            x = (u[i, 0] - 0.5) * da[0]
            y = (u[i, 1] - 0.5) * da[1]
            z = (u[i, 2] - 0.5) * da[2]
            wx = ca[0] + Ra[0, 0] * x + Ra[0, 1] * y + Ra[0, 2] * z - cb[0]
            wy = ca[1] + Ra[1, 0] * x + Ra[1, 1] * y + Ra[1, 2] * z - cb[1]
            wz = ca[2] + Ra[2, 0] * x + Ra[2, 1] * y + Ra[2, 2] * z - cb[2]
            qx = wx * Rb[0, 0] + wy * Rb[1, 0] + wz * Rb[2, 0]
            if qx > hx or qx < -hx:
                continue
            qy = wx * Rb[0, 1] + wy * Rb[1, 1] + wz * Rb[2, 1]
            if qy > hy or qy < -hy:
                continue
            qz = wx * Rb[0, 2] + wy * Rb[1, 2] + wz * Rb[2, 2]
            if qz > hz or qz < -hz:
                continue
            count += 1
        return count

else:
    _count_inside = None


def monte_carlo_intersection(a, b, n_samples, rng):
    """MC estimate of the intersection volume, sampling inside box a.

    Returns (estimate, sigma). Independent of the clipping implementation.
    """
    u = rng.random((n_samples, 3))
    if _count_inside is not None:
        count = _count_inside(u, a.center, a.rotation, a.dims, b.center, b.rotation, b.dims)
        p = count / n_samples
    else:
        local = (u - 0.5) * a.dims
        world = a.center + local @ a.rotation.T
        in_b_frame = (world - b.center) @ b.rotation
        p = (np.abs(in_b_frame) <= b.dims / 2).all(axis=1).mean()
    est = a.volume * p
    sigma = a.volume * np.sqrt(p * (1 - p) / n_samples)
    return est, sigma


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
