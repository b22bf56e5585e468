import math

import numpy as np
import pytest

from conftest import FIELD_RSS, random_instances
from crlbstat.crlb import (
    RSS,
    TOA,
    Bearing,
    DegenerateGeometryError,
    batch_traces,
    fim,
    pairwise_sin2_sum,
    pairwise_sin2_sum_identity,
    prefix_traces,
    trace_crlb,
    trace_via_inverse,
)
from crlbstat.geometry import AnchorSet, Annulus, sample_batch

TRIANGLE = AnchorSet([1, 1, 1], [0, 2 * math.pi / 3, 4 * math.pi / 3])
CROSS = AnchorSet([1, 2, 3, 4], [0, math.pi / 2, math.pi, 3 * math.pi / 2])


def numeric_fim(mean_fn, anchors, noise_std, h=1e-6):
    """Gaussian FIM J^T J / sigma^2 with J from central differences of the mean model."""
    pos = np.column_stack([anchors.d * np.cos(anchors.alpha), anchors.d * np.sin(anchors.alpha)])
    jac = np.empty((anchors.n, 2))
    for k in range(2):
        step = np.zeros(2)
        step[k] = h
        jac[:, k] = (mean_fn(pos, step) - mean_fn(pos, -step)) / (2 * h)
    return jac.T @ jac / noise_std**2


class TestModality:
    def test_b_from_channel(self):
        assert FIELD_RSS.b == pytest.approx((23 / (3.92 * math.log(10))) ** 2, rel=1e-15)
        assert FIELD_RSS.b == pytest.approx(6.49313, rel=1e-5)

    @pytest.mark.parametrize("make", [lambda: RSS(0, 1), lambda: RSS(2, -1), lambda: Bearing(0), lambda: TOA(-1)])
    def test_positive_parameters(self, make):
        with pytest.raises(ValueError):
            make()


class TestFim:
    def test_toa_right_angle(self):
        f = fim(TOA(1), AnchorSet([3, 5], [0, math.pi / 2]))
        np.testing.assert_allclose(f.as_array(), np.eye(2), atol=1e-15)

    def test_rss_single_anchor(self):
        rss = RSS(10 * math.log(10) / 10, 10)  # b = 1
        assert rss.b == pytest.approx(1.0)
        np.testing.assert_allclose(fim(rss, AnchorSet([1], [0])).as_array(), [[rss.b, 0], [0, 0]])

    def test_bearing_negated_cross_term(self):
        f = fim(Bearing(1), AnchorSet([1, 1], [0, math.pi / 4]))
        assert f.xy == pytest.approx(-0.5, rel=1e-15)

    def test_bearing_matches_numeric_differentiation(self):
        # bearing clockwise from north: anchor at (east, north) = (d sin a, d cos a)
        anchors = AnchorSet([1, 1], [0, math.pi / 4])
        en = np.column_stack([anchors.d * np.sin(anchors.alpha), anchors.d * np.cos(anchors.alpha)])

        def bearing(step):
            return np.arctan2(en[:, 0] - step[0], en[:, 1] - step[1])

        h = 1e-6
        jac = np.column_stack([(bearing(s) - bearing(-s)) / (2 * h) for s in (np.array([h, 0]), np.array([0, h]))])
        np.testing.assert_allclose(fim(Bearing(1), anchors).as_array(), jac.T @ jac, atol=1e-8)

    def test_rss_matches_numeric_differentiation(self, rng):
        anchors = next(random_instances(rng, 1, 6, 6))
        a = FIELD_RSS.path_loss_exponent

        def mean_dbm(pos, step):
            return -10 * a * np.log10(np.linalg.norm(pos - step, axis=1))

        num = numeric_fim(mean_dbm, anchors, FIELD_RSS.shadowing_sigma_db)
        np.testing.assert_allclose(fim(FIELD_RSS, anchors).as_array(), num, rtol=1e-7, atol=1e-7 * np.abs(num).max())

    def test_toa_matches_numeric_differentiation(self, rng):
        anchors = next(random_instances(rng, 1, 5, 5))

        def rng_m(pos, step):
            return np.linalg.norm(pos - step, axis=1)

        num = numeric_fim(rng_m, anchors, 0.3)
        np.testing.assert_allclose(fim(TOA(0.3), anchors).as_array(), num, rtol=1e-7, atol=1e-7 * np.abs(num).max())

    def test_zero_distance_rejected_for_rss(self):
        with pytest.raises(DegenerateGeometryError):
            fim(FIELD_RSS, AnchorSet([0, 1, 2], [0, 1, 2]))

    def test_zero_distance_fine_for_toa(self):
        assert math.isfinite(trace_crlb(TOA(1), AnchorSet([0, 1, 2], [0, 1, 2])))

    def test_symmetric_psd(self, rng):
        for anchors in random_instances(rng, 200):
            f = fim(Bearing(0.1), anchors).as_array()
            assert np.all(np.linalg.eigvalsh(f) >= -1e-9 * np.abs(f).max())


class TestTrace:
    def test_toa_cross_is_one(self):
        assert trace_crlb(TOA(1), CROSS) == pytest.approx(1.0, rel=1e-15)

    def test_rss_collinear_is_singular(self):
        assert math.isinf(trace_crlb(FIELD_RSS, AnchorSet([1, 2, 3, 4], [0.7] * 4)))
        assert math.isinf(trace_crlb(FIELD_RSS, AnchorSet([1, 2, 3], [0.2, 0.2 + math.pi, 0.2])))

    def test_rss_triangle(self):
        expected = 4 / (3 * FIELD_RSS.b)
        assert trace_crlb(FIELD_RSS, TRIANGLE) == pytest.approx(expected, rel=1e-14)
        assert trace_via_inverse(FIELD_RSS, TRIANGLE) == pytest.approx(expected, rel=1e-14)
        assert trace_crlb(FIELD_RSS, TRIANGLE) == pytest.approx(0.20534, rel=1e-4)

    def test_identity_fim_trace_two(self):
        # the four-anchor cross has FIM = 2I / s^2, so s^2 = 2 gives the identity
        assert trace_via_inverse(TOA(math.sqrt(2)), CROSS) == pytest.approx(2.0, rel=1e-14)

    def test_det_zero_singular_in_inverse(self):
        assert math.isinf(trace_via_inverse(TOA(1), AnchorSet([1, 1, 1], [0, 0, 0])))

    @pytest.mark.parametrize("modality,n", [(FIELD_RSS, 2), (TOA(1), 2), (Bearing(1), 1)])
    def test_minimum_anchor_count(self, modality, n):
        with pytest.raises(ValueError):
            trace_crlb(modality, AnchorSet([1] * n, np.arange(n)))

    def test_bearing_two_anchors_ok(self):
        assert math.isfinite(trace_crlb(Bearing(0.1), AnchorSet([1, 2], [0, 1])))

    def test_pairwise_identity(self, rng):
        for anchors in random_instances(rng, 500):
            w = 1 / anchors.d**2
            assert pairwise_sin2_sum_identity(w, anchors.alpha) == pytest.approx(
                pairwise_sin2_sum(w, anchors.alpha), rel=1e-9
            )
            one = np.ones(anchors.n)
            assert pairwise_sin2_sum_identity(one, anchors.alpha) == pytest.approx(
                pairwise_sin2_sum(one, anchors.alpha), rel=1e-9
            )

    def test_no_false_singularity_at_large_n(self):
        d, alpha = sample_batch(Annulus(1, 10), 2000, 1, [0])
        assert math.isfinite(trace_crlb(FIELD_RSS, AnchorSet(d[0], alpha[0])))


class TestProperties:
    MODALITIES = [FIELD_RSS, Bearing(0.05), TOA(1.0)]

    @pytest.mark.parametrize("modality", MODALITIES, ids=lambda m: m.name)
    def test_closed_form_matches_inverse(self, modality, rng):
        worst = 0.0
        for anchors in random_instances(rng, 2000):
            a, b = trace_crlb(modality, anchors), trace_via_inverse(modality, anchors)
            worst = max(worst, abs(a - b) / b)
        assert worst < 1e-10

    @pytest.mark.parametrize("modality", MODALITIES, ids=lambda m: m.name)
    def test_rotation_invariance(self, modality, rng):
        for anchors in random_instances(rng, 500):
            shift = rng.random() * 2 * math.pi
            assert trace_crlb(modality, anchors.rotated(shift)) == pytest.approx(
                trace_crlb(modality, anchors), rel=1e-12
            )

    def test_rss_scale_law(self, rng):
        for anchors in random_instances(rng, 500):
            s = 0.1 + 5 * rng.random()
            assert trace_crlb(FIELD_RSS, anchors.scaled(s)) == pytest.approx(
                s * s * trace_crlb(FIELD_RSS, anchors), rel=1e-12
            )

    def test_toa_ignores_distance(self, rng):
        for anchors in random_instances(rng, 500):
            moved = AnchorSet(anchors.d * rng.random(anchors.n) * 7, anchors.alpha)
            assert trace_crlb(TOA(1.3), moved) == trace_crlb(TOA(1.3), anchors)

    def test_bearing_equals_rss_with_matching_coefficient(self, rng):
        sigma = 1 / math.sqrt(FIELD_RSS.b)
        bearing = Bearing(sigma)
        for anchors in random_instances(rng, 500):
            assert trace_crlb(bearing, anchors) == pytest.approx(trace_crlb(FIELD_RSS, anchors), rel=1e-15)

    @pytest.mark.parametrize("modality", MODALITIES, ids=lambda m: m.name)
    def test_adding_anchor_never_hurts(self, modality, rng):
        for anchors in random_instances(rng, 500):
            extra = anchors.with_anchor(1 + 9 * rng.random(), 2 * math.pi * rng.random())
            assert trace_crlb(modality, extra) <= trace_crlb(modality, anchors) * (1 + 1e-12)


class TestBatch:
    @pytest.mark.parametrize("modality", TestProperties.MODALITIES, ids=lambda m: m.name)
    def test_batch_matches_single(self, modality):
        d, alpha = sample_batch(Annulus(1, 10), 8, 4, np.arange(300))
        batch = batch_traces(modality, d, alpha)
        single = [trace_crlb(modality, AnchorSet(d[k], alpha[k])) for k in range(300)]
        np.testing.assert_allclose(batch, single, rtol=1e-12)

    def test_prefix_columns(self):
        d, alpha = sample_batch(Annulus(1, 10), 7, 4, np.arange(50))
        table = prefix_traces(FIELD_RSS, d, alpha)
        assert np.all(np.isnan(table[:, :2]))
        for k in range(3, 8):
            np.testing.assert_allclose(table[:, k - 1], batch_traces(FIELD_RSS, d[:, :k], alpha[:, :k]), rtol=1e-12)

    def test_batch_singular_is_inf(self):
        alpha = np.full((4, 3), 1.0)
        assert np.all(np.isinf(batch_traces(TOA(1), np.ones((4, 3)), alpha)))
