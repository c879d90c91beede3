"""
Tests for the split-signature metric, its curvature and the beta-plane frames.
"""
import numpy as np
import pytest

from correspondence.services.metric import (
    ORIENTATION, MetricError, beta_check, beta_frame, bivector_duality, curvature_report, curvature_sweep,
    metric_at, self_duality_study, signature,
)
from correspondence.services.monopole import MonopolePair, combine_pairs, monopole_from_h, monopole_from_potential
from correspondence.services.profiles import CylinderFunction, SeparableField

WEAK_POINT = (0.0, 0.0, 0.5, 0.0)


def _constant(value):
    def evaluate(t, x1, x2, deriv=(0, 0, 0)):
        shape = np.broadcast(np.asarray(t), np.asarray(x1), np.asarray(x2)).shape
        return np.full(shape, value if sum(deriv) == 0 else 0.0)
    return evaluate


@pytest.fixture
def flat():
    return monopole_from_h(CylinderFunction.zero())


class TestMetric:

    def test_flat_model(self, flat):
        np.testing.assert_array_equal(metric_at(flat, (0.3, 0.1, -0.2, 0.4)), np.diag([-1.0, -1.0, 1.0, 1.0]))

    def test_constant_V(self):
        m = MonopolePair(_constant(2.0), (_constant(0.0), _constant(0.0), _constant(0.0)))
        np.testing.assert_allclose(metric_at(m, (0, 0, 0, 0)), np.diag([-0.5, -2.0, 2.0, 2.0]))

    def test_signature_and_determinant(self, cos_gaussian, rng):
        m = monopole_from_h(cos_gaussian)
        for _ in range(50):
            p = (rng.uniform(-1, 1), *rng.uniform(-1, 1, 3))
            g = metric_at(m, p)
            V = float(m.V(*p[1:]))
            assert signature(g) == (2, 2)
            assert np.linalg.det(g) == pytest.approx(V * V, rel=1e-10)
            np.testing.assert_array_equal(g, g.T)

    def test_metric_is_independent_of_s(self, cos_gaussian):
        m = monopole_from_h(cos_gaussian)
        np.testing.assert_array_equal(metric_at(m, (0.0, 0.2, 0.3, 0.4)), metric_at(m, (5.0, 0.2, 0.3, 0.4)))

    def test_partials_match_differences(self, cos_gaussian):
        m = monopole_from_h(cos_gaussian)
        p = np.array([0.0, 0.2, -0.3, 0.6])
        _, dg = metric_at(m, p, with_partials=True)
        assert np.all(dg[0] == 0.0)
        step = 1e-5
        for k in (1, 2, 3):
            shift = np.zeros(4)
            shift[k] = step
            difference = (metric_at(m, p + shift) - metric_at(m, p - shift)) / (2 * step)
            np.testing.assert_allclose(dg[k], difference, rtol=0, atol=1e-8)

    def test_nonpositive_V_is_rejected(self):
        m = monopole_from_potential(SeparableField.t_squared_gaussian(1.0))
        with pytest.raises(MetricError):
            metric_at(m, (0.0, 1.0, 0.0, 0.0))

    def test_point_must_have_four_coordinates(self, flat):
        with pytest.raises(MetricError):
            metric_at(flat, (0.0, 0.0, 0.0))


class TestCurvature:

    def test_flat_model_is_flat(self, flat):
        report = curvature_report(flat, (0.0, 0.1, 0.2, 0.3))
        assert report.riemann_max < 1e-10
        assert report.weyl_sd_norm == report.weyl_asd_norm == 0.0

    def test_weyl_tensor_is_anti_self_dual(self, weak_cos_gaussian):
        study = self_duality_study(monopole_from_h(weak_cos_gaussian), WEAK_POINT)
        assert all(order >= 1.8 for order in study['asd_orders'])
        assert study['weyl_sd_norm'][-1] > 100.0 * study['weyl_asd_norm'][-1]
        assert study['ratios'] == sorted(study['ratios'], reverse=True)

    def test_broken_pair_is_not_anti_self_dual(self, weak_cos_gaussian):
        broken = combine_pairs(monopole_from_h(weak_cos_gaussian), monopole_from_h(weak_cos_gaussian.scaled(2.0)))
        study = self_duality_study(broken, WEAK_POINT)
        assert study['weyl_asd_norm'][-1] > 1e-3
        assert abs(study['asd_orders'][-1]) < 0.5

    def test_riemann_identities(self, cos_gaussian):
        report = curvature_report(monopole_from_h(cos_gaussian), (0.0, 0.1, 0.4, -0.3), truncation=True)
        bound = max(10.0 * report.truncation_estimate, 1e-9)
        assert report.symmetry_defect <= bound
        assert report.bianchi_defect <= bound
        assert report.trace_defect < 1e-9
        assert report.riemann_max > 1e-3

    def test_duality_ratio_is_conformally_invariant(self, weak_cos_gaussian):
        m = monopole_from_h(weak_cos_gaussian)
        plain = curvature_report(m, WEAK_POINT, step=1e-2)
        scaled = curvature_report(m, WEAK_POINT, step=1e-2, scale=3.0)
        assert scaled.weyl_sd_norm == pytest.approx(3.0 * plain.weyl_sd_norm, rel=1e-8)
        assert (scaled.weyl_asd_norm / scaled.weyl_sd_norm
                == pytest.approx(plain.weyl_asd_norm / plain.weyl_sd_norm, rel=1e-5))

    def test_step_must_be_positive(self, flat):
        with pytest.raises(MetricError):
            curvature_report(flat, (0, 0, 0, 0), step=-1e-3)

    def test_report_dict(self, weak_cos_gaussian):
        report = curvature_report(monopole_from_h(weak_cos_gaussian), WEAK_POINT)
        data = report.to_dict()
        assert data['point'] == list(WEAK_POINT)
        assert data['truncation_estimate'] is None
        assert data['weyl_asd_norm'] == report.weyl_asd_norm

    def test_sweep_rows(self, weak_cos_gaussian):
        rows = curvature_sweep(monopole_from_h(weak_cos_gaussian), [(0, 0, 0, 0), WEAK_POINT])
        assert len(rows) == 2
        assert set(rows[0]) == {'t', 'x1', 'x2', 'weyl_sd_norm', 'weyl_asd_norm', 'V'}
        assert rows[1]['x1'] == 0.5


class TestBetaPlanes:

    def test_flat_frame_is_totally_null(self, flat):
        for angle in np.linspace(0, 2 * np.pi, 7):
            check = beta_check(flat, (0.0, 0.2, -0.1, 0.3), np.exp(1j * angle))
            assert check.max_g < 1e-12

    def test_frames_are_null_for_a_pair_from_h(self, cos_gaussian, rng):
        m = monopole_from_h(cos_gaussian)
        for _ in range(50):
            p = (rng.uniform(-1, 1), *rng.uniform(-1, 1, 3))
            check = beta_check(m, p, np.exp(1j * rng.uniform(0, 2 * np.pi)))
            assert check.max_g < 1e-9

    def test_rescaled_frame_is_not_null(self, cos_gaussian):
        check = beta_check(monopole_from_h(cos_gaussian), (0.0, 0.1, 0.2, 0.3), 1j, s_scale=1.1)
        assert check.max_g > 1e-3

    def test_omega_must_be_unimodular(self, flat):
        with pytest.raises(MetricError):
            beta_frame(flat, (0, 0, 0, 0), 0.5)

    def test_beta_bivector_is_anti_self_dual(self, flat, cos_gaussian):
        assert ORIENTATION == -1.0
        for m in (flat, monopole_from_h(cos_gaussian)):
            p = (0.0, 0.2, 0.1, -0.3)
            frame = beta_frame(m, p, np.exp(0.7j))
            duality = bivector_duality(frame, metric_at(m, p))
            assert duality['anti_self_dual_defect'] < 1e-10
            assert duality['self_dual_defect'] > 0.1
