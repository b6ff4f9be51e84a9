import numpy as np
import pytest

from det3dkit.errors import EmptyMask, LengthMismatch, NonPositiveDepth
from det3dkit.geometry import Box2D, Rot6D
from det3dkit.lifting import LiftParams
from det3dkit.losses import LossWeights, final_loss, giou_2d, l1_3d, silog


def params(**overrides):
    base = dict(
        u_off=0.0, v_off=0.0, d_log=1.0, dims_log=(0, 0, 0), rot6d=Rot6D((1, 0, 0), (0, 1, 0))
    )
    base.update(overrides)
    return LiftParams(**base)


class TestL13D:
    def test_zero_at_target(self):
        p = params()
        assert l1_3d(p, p) == 0.0

    def test_single_component(self):
        assert l1_3d(params(u_off=0.5), params()) == pytest.approx(0.5)

    def test_symmetric(self, rng):
        a = params(d_log=rng.normal(), dims_log=rng.normal(size=3))
        b = params(u_off=rng.normal(), v_off=rng.normal())
        assert l1_3d(a, b) == pytest.approx(l1_3d(b, a))


class TestGIoU:
    def test_identical(self):
        box = Box2D(0, 0, 2, 3)
        assert giou_2d(box, box) == pytest.approx(1.0)

    def test_disjoint_with_gap(self):
        # inter 0, union 2, hull 3
        assert giou_2d(Box2D(0, 0, 1, 1), Box2D(2, 0, 3, 1)) == pytest.approx(-1 / 3)

    def test_never_exceeds_iou(self, rng):
        for _ in range(200):
            x1, y1 = rng.uniform(0, 10, 2)
            a = Box2D(x1, y1, x1 + rng.uniform(0.1, 5), y1 + rng.uniform(0.1, 5))
            x1, y1 = rng.uniform(0, 10, 2)
            b = Box2D(x1, y1, x1 + rng.uniform(0.1, 5), y1 + rng.uniform(0.1, 5))
            ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
            iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
            iou = ix * iy / (a.area + b.area - ix * iy)
            assert giou_2d(a, b) <= iou + 1e-12

    def test_translation_invariant(self):
        a, b = Box2D(0, 0, 1, 2), Box2D(0.5, 0.2, 2, 3)
        a2, b2 = Box2D(7, -3, 8, -1), Box2D(7.5, -2.8, 9, 0)
        assert giou_2d(a, b) == pytest.approx(giou_2d(a2, b2))


class TestSilog:
    def test_zero_at_target(self):
        assert silog([1.0, 2.0, 5.0], [1.0, 2.0, 5.0]) == 0.0

    def test_full_scale_invariance(self):
        gt = np.array([1.0, 2.0, 4.0])
        assert silog(3.7 * gt, gt, lambda_si=1.0) == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_two_pixel_case(self):
        # g = (0, ln4): mean g^2 = (ln4)^2/2, (mean g)^2 = (ln4/2)^2
        expected = (np.log(4) ** 2) / 2 - 0.5 * (np.log(4) / 2) ** 2
        assert silog([1.0, 4.0], [1.0, 1.0], lambda_si=0.5) == pytest.approx(expected)
        assert expected == pytest.approx(0.7207, abs=1e-4)

    def test_mask(self):
        loss = silog([1.0, 99.0], [1.0, 2.0], valid_mask=[True, False])
        assert loss == 0.0

    def test_errors(self):
        with pytest.raises(EmptyMask):
            silog([1.0], [1.0], valid_mask=[False])
        with pytest.raises(NonPositiveDepth):
            silog([-1.0], [1.0])

    def test_rescaling_invariance_property(self, rng):
        gt = rng.uniform(0.5, 20, size=50)
        pred = gt * np.exp(rng.normal(size=50) * 0.2)
        c = rng.uniform(0.1, 10)
        assert silog(c * pred, c * gt, lambda_si=1.0) == pytest.approx(
            silog(pred, gt, lambda_si=1.0)
        )


class TestFinalLoss:
    def test_all_zero(self):
        assert final_loss([0, 0], [0, 0], 0.0) == 0.0

    def test_weighting_example(self):
        # defaults: unit 2D/3D weights, depth weight 10
        assert final_loss([1.0], [2.0], 0.1) == pytest.approx(4.0)

    def test_linear_in_depth(self):
        w = LossWeights()
        base = final_loss([1.0], [1.0], 0.0, w)
        assert final_loss([1.0], [1.0], 0.25, w) - base == pytest.approx(0.25 * w.lambda_depth)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            final_loss([1.0, 2.0], [1.0], 0.0)
