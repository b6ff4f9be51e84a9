import numpy as np
import pytest

from det3dkit.errors import InvalidSpec
from det3dkit.geometry import project
from det3dkit.metrics import evaluate
from det3dkit.synth import (
    ClassSpec,
    PerturbModel,
    SceneSpec,
    generate,
    large_box_spec,
    perturb,
    thin_box_spec,
)


class TestGenerate:
    def test_determinism(self):
        spec = SceneSpec(n_frames=5, seed=42)
        gts1, intr1 = generate(spec)
        gts2, intr2 = generate(spec)
        assert len(gts1) == len(gts2)
        for a, b in zip(gts1, gts2):
            assert a.frame_id == b.frame_id and a.label == b.label
            assert np.array_equal(a.box3d.center, b.box3d.center)
            assert np.array_equal(a.box3d.rotation, b.box3d.rotation)
        assert intr1 == intr2

    def test_empty(self):
        gts, intr = generate(SceneSpec(n_frames=0))
        assert gts == [] and intr == {}

    def test_invalid_spec(self):
        with pytest.raises(InvalidSpec):
            generate(SceneSpec(depth_range=(5.0, 1.0)))
        with pytest.raises(InvalidSpec):
            generate(SceneSpec(classes=[]))

    def test_boxes_valid_and_visible(self):
        spec = SceneSpec(n_frames=50, boxes_per_frame=20, seed=1)
        gts, intr = generate(spec)
        assert len(gts) == 1000
        for g in gts:
            K = intr[g.frame_id]
            assert (g.box3d.dims > 0).all()
            u, v = project(g.box3d.center, K)
            assert 0 <= u <= K.width and 0 <= v <= K.height


class TestPerturb:
    def test_zero_noise_is_identity(self):
        gts, intr = generate(SceneSpec(n_frames=4, seed=2))
        dets = perturb(gts, PerturbModel(seed=2), intr)
        assert len(dets) == len(gts)
        report = evaluate(gts, dets)
        assert report.ods == 1.0

    def test_all_missed(self):
        gts, intr = generate(SceneSpec(n_frames=3, seed=2))
        dets = perturb(gts, PerturbModel(p_miss=1.0, seed=2), intr)
        assert dets == []
        assert evaluate(gts, dets).ap_dist == 0.0

    def test_determinism(self):
        gts, intr = generate(SceneSpec(n_frames=4, seed=3))
        m = PerturbModel(sigma_t=0.3, sigma_s=0.1, sigma_r=0.2, fp_rate=1.0, seed=7)
        d1 = perturb(gts, m, intr)
        d2 = perturb(gts, m, intr)
        assert len(d1) == len(d2)
        for a, b in zip(d1, d2):
            assert a.score == b.score
            assert np.array_equal(a.box3d.center, b.box3d.center)

    def test_noise_monotonicity(self):
        gts, intr = generate(SceneSpec(n_frames=20, seed=4))
        ap = []
        for sigma in (0.05, 0.3, 1.0):
            dets = perturb(gts, PerturbModel(sigma_t=sigma, seed=4), intr)
            ap.append(evaluate(gts, dets).ap_dist)
        assert ap[0] >= ap[1] >= ap[2]

    def test_thin_vs_large_gap(self):
        model = PerturbModel(sigma_t=0.2, seed=0)
        gts, intr = generate(thin_box_spec(seed=0))
        r_thin = evaluate(gts, perturb(gts, model, intr))
        gts, intr = generate(large_box_spec(seed=0))
        r_large = evaluate(gts, perturb(gts, model, intr))
        assert r_thin.ap_dist - r_thin.ap_iou > 0.2
        assert abs(r_large.ap_dist - r_large.ap_iou) < 0.1

    def test_fp_rate_produces_extra_detections(self):
        gts, intr = generate(SceneSpec(n_frames=20, seed=5))
        dets = perturb(gts, PerturbModel(fp_rate=2.0, seed=5), intr)
        assert len(dets) > len(gts)

    def test_invalid_model(self):
        with pytest.raises(InvalidSpec):
            perturb([], PerturbModel(p_miss=1.5))
