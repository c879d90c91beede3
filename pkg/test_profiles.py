"""
Tests for v-profiles, cylinder functions, plane functions and separable fields.
"""
import math

import numpy as np
import pytest
from scipy import integrate

from correspondence.services.profiles import (
    CylinderFunction, Mode, PlaneFunction, ProfileError, SeparableField, VProfile,
)
from factories import CylinderFunctionFactory, ModeFactory, PlaneFunctionFactory, SechProfileFactory


class TestVProfile:

    def test_gaussian_values_and_derivative(self):
        profile = VProfile.gaussian()
        assert profile(0.0) == pytest.approx(1.0)
        assert profile.derivative(1.0, 1) == pytest.approx(-2.0 / math.e)
        assert profile.derivative(0.0, 2) == pytest.approx(-2.0)

    def test_width_and_center_scale_derivatives(self):
        profile = VProfile.gaussian(2.0, center=0.5, width=0.5)
        v = 0.8
        y = (v - 0.5) / 0.5
        assert profile(v) == pytest.approx(2.0 * math.exp(-y * y))
        assert profile.derivative(v, 1) == pytest.approx(2.0 * (-2.0 * y) * math.exp(-y * y) / 0.5)

    @pytest.mark.parametrize('profile', [
        VProfile.gaussian_poly([0.3, -1.0, 0.5], center=0.2, width=1.3),
        VProfile.sech_pow(0.7, center=-0.4, width=0.9, power=3.0),
        VProfile.hermite_gaussian(3, 0.2, 0.0, 1.5),
    ])
    def test_closed_form_derivatives_match_differences(self, profile):
        v = np.linspace(-3.0, 3.0, 13)
        step = 1e-4
        for n in range(4):
            difference = (profile.derivative(v + step, n) - profile.derivative(v - step, n)) / (2 * step)
            np.testing.assert_allclose(profile.derivative(v, n + 1), difference, rtol=0, atol=1e-6)

    def test_derivative_order_is_bounded(self):
        with pytest.raises(ProfileError):
            VProfile.gaussian().derivative(0.0, 5)

    def test_hermite_profiles_have_vanishing_moments(self):
        profile = VProfile.hermite_gaussian(4, 1.0, 0.0, 1.5)
        for power in range(4):
            moment, _ = integrate.quad(lambda v: v ** power * float(profile(v)), -20, 20, limit=200)
            assert moment == pytest.approx(0.0, abs=1e-10)
        total, _ = integrate.quad(lambda v: v ** 4 * float(profile(v)), -20, 20, limit=200)
        assert abs(total) > 1e-3

    def test_invalid_profiles_are_rejected(self):
        with pytest.raises(ProfileError):
            VProfile(kind='spline')
        with pytest.raises(ProfileError):
            VProfile.gaussian(width=0.0)
        with pytest.raises(ProfileError):
            VProfile.sech_pow(power=-1.0)

    def test_from_spec_shorthand(self):
        assert VProfile.from_spec('gaussian(2, 0.5, 1.5)') == VProfile.gaussian(2.0, 0.5, 1.5)
        assert VProfile.from_spec('sech_pow(1,0,1,2)') == VProfile.sech_pow(1.0, 0.0, 1.0, 2.0)
        assert VProfile.from_spec('zero').is_zero
        assert VProfile.from_spec(None).is_zero
        assert VProfile.from_spec('gaussian_poly([1, 0, 2], 0, 1)').coefficients == (1.0, 0.0, 2.0)
        assert VProfile.from_spec({'kind': 'hermite', 'order': 2}) == VProfile.hermite_gaussian(2)

    @pytest.mark.parametrize('spec', ['wobble(1)', 'gaussian(1,', 'gaussian(1,2,3,4,5)', 42,
                                      {'kind': 'sech_pow', 'colour': 1}])
    def test_from_spec_errors(self, spec):
        with pytest.raises(ProfileError):
            VProfile.from_spec(spec)

    def test_scaled(self):
        profile = SechProfileFactory()
        assert profile.scaled(2.0)(0.3) == pytest.approx(2.0 * profile(0.3))

    def test_constant_profile_does_not_decay(self):
        profile = VProfile.constant(1.5)
        assert not profile.decays
        assert profile.derivative(3.0, 1) == 0.0
        assert VProfile.gaussian().decays


class TestCylinderFunction:

    def test_mode_index_must_be_non_negative(self):
        with pytest.raises(ProfileError):
            Mode(k=-1, cos_profile=VProfile.gaussian())

    def test_zero_mode_has_no_sine(self):
        with pytest.raises(ProfileError):
            Mode(k=0, cos_profile=VProfile.gaussian(), sin_profile=VProfile.gaussian())

    def test_evaluate_sums_modes(self):
        h = CylinderFunction(modes=(
            Mode(k=0, cos_profile=VProfile.gaussian(0.5)),
            Mode(k=2, cos_profile=VProfile.zero(), sin_profile=VProfile.gaussian()),
        ))
        theta, v = 0.3, 0.4
        expected = 0.5 * math.exp(-v * v) + math.sin(2 * theta) * math.exp(-v * v)
        assert h(theta, v) == pytest.approx(expected)

    def test_evaluate_broadcasts(self):
        h = CylinderFunctionFactory()
        values = h(np.linspace(0, 1, 4)[:, None], np.linspace(-1, 1, 5)[None, :], 2)
        assert values.shape == (4, 5)

    def test_zero_function(self):
        h = CylinderFunction.zero()
        assert h.is_zero
        assert h(1.0, 2.0) == 0.0
        assert h.max_k == 0

    def test_from_spec_and_back(self):
        h = CylinderFunction.from_spec([{'k': 1, 'cos': 'gaussian(1,0,1)', 'sin': 'sech_pow(0.5,0,1,2)'}])
        assert h.max_k == 1
        again = CylinderFunction.from_spec(h.to_spec())
        assert again(0.7, -0.2, 1) == pytest.approx(h(0.7, -0.2, 1))

    @pytest.mark.parametrize('spec', [[{'cos': 'gaussian'}], [{'k': 1, 'tan': 'gaussian'}], [{'k': -2}]])
    def test_from_spec_errors(self, spec):
        with pytest.raises(ProfileError):
            CylinderFunction.from_spec(spec)

    def test_decay_issues(self):
        assert CylinderFunctionFactory().decay_issues() == []
        flat = CylinderFunction.single_mode(1, cos=VProfile.constant(1.0))
        assert 'not rapidly decreasing' in flat.decay_issues()[0]
        wide = CylinderFunction.single_mode(1, cos=VProfile.gaussian(width=4.0))
        assert wide.decay_issues(cutoff=6.0)

    def test_scaled_and_plus(self):
        h = CylinderFunction.single_mode(1, cos=VProfile.gaussian(), label='h')
        doubled = h.plus(h)
        assert doubled(0.2, 0.1) == pytest.approx(h.scaled(2.0)(0.2, 0.1))
        assert len(CylinderFunctionFactory(modes=(ModeFactory(k=3), ModeFactory(k=5))).modes) == 2


class TestPlaneFunction:

    def test_gaussian_gradient(self):
        f = PlaneFunctionFactory(amplitude=2.0, width=1.5)
        g1, g2 = f.gradient(0.4, -0.3)
        step = 1e-5
        assert g1 == pytest.approx((f(0.4 + step, -0.3) - f(0.4 - step, -0.3)) / (2 * step), abs=1e-8)
        assert g2 == pytest.approx((f(0.4, -0.3 + step) - f(0.4, -0.3 - step)) / (2 * step), abs=1e-8)

    def test_from_spec(self):
        f = PlaneFunction.from_spec('x1_gaussian(1, 1)')
        assert f(1.0, 0.0) == pytest.approx(math.exp(-1.0))
        assert PlaneFunction.from_spec('linear(1, 2, 3)')(1.0, 1.0) == pytest.approx(6.0)
        assert PlaneFunction.from_spec(None)(3.0, 4.0) == 0.0
        with pytest.raises(ProfileError):
            PlaneFunction.from_spec('cone(1)')

    def test_decay_issues(self):
        assert PlaneFunction.gaussian().decay_issues() == []
        assert PlaneFunction.linear().decay_issues()

    def test_from_grid_interpolates_and_vanishes_outside(self):
        f = PlaneFunction.gaussian()
        x = np.linspace(-4.0, 4.0, 161)
        X1, X2 = np.meshgrid(x, x, indexing='ij')
        sampled = PlaneFunction.from_grid(x, x, f(X1, X2))
        points = np.array([[0.013, -0.27], [1.111, 0.555], [-2.3, 1.9]])
        np.testing.assert_allclose(sampled(points[:, 0], points[:, 1]), f(points[:, 0], points[:, 1]),
                                   rtol=0, atol=1e-6)
        g1, _ = sampled.gradient(0.5, 0.2)
        assert g1 == pytest.approx(f.gradient(0.5, 0.2)[0], abs=1e-5)
        assert sampled(5.0, 0.0) == 0.0
        assert not hasattr(sampled, 'samples')


class TestSeparableField:

    def test_gaussian_bump_partials(self):
        field = SeparableField.gaussian_bump(2.0, 1.0)
        t, x1, x2 = 0.3, -0.2, 0.5
        value = 2.0 * math.exp(-(t * t + x1 * x1 + x2 * x2))
        assert field(t, x1, x2) == pytest.approx(value)
        assert field(t, x1, x2, (1, 0, 0)) == pytest.approx(-2 * t * value)
        assert field(t, x1, x2, (0, 1, 1)) == pytest.approx(4 * x1 * x2 * value)

    def test_t_squared_gaussian(self):
        field = SeparableField.t_squared_gaussian(0.5)
        assert field(2.0, 0.0, 0.0) == pytest.approx(2.0)
        assert field(2.0, 0.0, 0.0, (1, 0, 0)) == pytest.approx(2.0)
        assert field(2.0, 0.0, 0.0, (2, 0, 0)) == pytest.approx(1.0)

    def test_from_spec(self):
        assert SeparableField.from_spec('bump(0.05, 1.0)').label == 'bump(0.05,1.0)'
        assert SeparableField.from_spec('t2_gaussian(1)')(1.0, 0.0, 0.0) == pytest.approx(1.0)
        for spec in ('ripple(1)', 'bump(1', 'bump(1,2,3)'):
            with pytest.raises(ProfileError):
                SeparableField.from_spec(spec)
