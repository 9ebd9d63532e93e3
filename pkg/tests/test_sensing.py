import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from witnesszone import (
    ChannelParams,
    FeatureDescriptor,
    Modality,
    Scene,
    Vector3,
    WitnessIdentity,
    rf_similarity,
    sample_rf_feature,
    visual_detect,
)
from witnesszone.sensing import sample_visual_feature

finite_db = st.floats(min_value=-200.0, max_value=200.0, allow_nan=False)


def witness_at(x, y):
    return WitnessIdentity("w1", b"\x00" * 32, Vector3(x, y, 0.0))


class TestRfSimilarity:
    def test_identity(self):
        assert rf_similarity(66.0, 66.0) == 1.0

    def test_linear_midpoint(self):
        assert rf_similarity(66.0, 51.0) == 0.5
        assert rf_similarity(51.0, 66.0) == 0.5

    def test_full_scale(self):
        assert rf_similarity(100.0, 70.0) == 0.0
        assert rf_similarity(100.0, 60.0) == 0.0

    @given(finite_db, finite_db)
    def test_symmetry_and_range(self, a, b):
        s = rf_similarity(a, b)
        assert s == rf_similarity(b, a)
        assert 0.0 <= s <= 1.0

    @given(finite_db, finite_db, st.floats(min_value=0.0, max_value=50.0))
    def test_lipschitz_in_mismatch(self, a, b, bump):
        # moving the observation by x dB moves the score by at most x/30
        s1 = rf_similarity(a, b)
        s2 = rf_similarity(a + bump, b)
        assert abs(s1 - s2) <= bump / 30.0 + 1e-12


class TestSampleRfFeature:
    def test_truthful_no_shadowing_scores_one(self, rng):
        params = ChannelParams(shadow_sigma=0.0)
        w = witness_at(10, 10)
        pos = Vector3(5, 5, 0)
        feature = sample_rf_feature(w, pos, pos, params, rng)
        assert feature.value == 1.0
        assert feature.modality is Modality.RF_FINGERPRINT
        assert feature.witness_id == "w1"

    def test_truthful_with_shadowing_stays_above_half(self):
        # honest failure probability is 2*Phi(-15/3) ~ 5.7e-7; over 1e5
        # fixed-seed draws we expect zero threshold crossings
        params = ChannelParams()
        w = witness_at(10, 10)
        pos = Vector3(5, 5, 0)
        rng = np.random.default_rng(8)
        values = [sample_rf_feature(w, pos, pos, params, rng).value for _ in range(100_000)]
        assert min(values) > 0.5
        assert np.mean(values) > 0.9

    def test_fraud_offset_matches_path_loss_arithmetic(self, rng):
        # prover truly at (13,13), claiming (5,5), witness at (-10,-10):
        # score = 1 - 20*log10(d_true/d_claim)/30 with zero shadowing
        params = ChannelParams(shadow_sigma=0.0)
        w = witness_at(-10, -10)
        true_pos = Vector3(13, 13, 0)
        claimed = Vector3(5, 5, 0)
        d_true = math.sqrt(23.0**2 + 23.0**2)
        d_claim = math.sqrt(15.0**2 + 15.0**2)
        expected = 1.0 - (20.0 * math.log10(d_true / d_claim)) / 30.0
        assert expected == pytest.approx(0.8762, abs=0.0005)
        feature = sample_rf_feature(w, true_pos, claimed, params, rng)
        assert feature.value == pytest.approx(expected, abs=1e-12)


class TestVisualDetect:
    def test_present_certain_detection(self, rng):
        assert visual_detect(Scene.of("red car"), "red car", 1.0, rng) is True

    def test_absent_never_detected(self, rng):
        scene = Scene.of("blue van")
        assert all(
            visual_detect(scene, "red car", p, rng) is False
            for p in (0.0, 0.25, 0.5, 0.75, 1.0)
            for _ in range(200)
        )

    def test_zero_probability_never_detects(self, rng):
        scene = Scene.of("red car")
        assert all(not visual_detect(scene, "red car", 0.0, rng) for _ in range(500))

    def test_detection_rate_matches_p_det(self):
        rng = np.random.default_rng(3)
        n = 50_000
        hits = sum(visual_detect(Scene.of("red car"), "red car", 0.9695, rng) for _ in range(n))
        se = math.sqrt(0.9695 * (1 - 0.9695) / n)
        assert abs(hits / n - 0.9695) < 3 * se

    def test_invalid_probability(self, rng):
        with pytest.raises(ValueError):
            visual_detect(Scene.of("x"), "x", 1.5, rng)

    def test_feature_requires_all_asserts(self, rng):
        w = witness_at(10, 10)
        scene = Scene.of("red car")
        ok = sample_visual_feature(w, scene, ("red car",), 1.0, rng)
        assert ok.value is True
        missing = sample_visual_feature(w, scene, ("red car", "fountain"), 1.0, rng)
        assert missing.value is False
        empty = sample_visual_feature(w, scene, (), 1.0, rng)
        assert empty.value is False


class TestFeatureDescriptor:
    def test_quality_range(self):
        with pytest.raises(ValueError):
            FeatureDescriptor(Modality.VISUAL, True, quality=1.5)

    def test_negative_freshness(self):
        with pytest.raises(ValueError):
            FeatureDescriptor(Modality.VISUAL, True, freshness=-1.0)

    def test_modality_normalizes_from_string(self):
        f = FeatureDescriptor("visual", True)
        assert f.modality is Modality.VISUAL
