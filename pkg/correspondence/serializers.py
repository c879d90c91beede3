"""
Django REST Framework serializers for twistor correspondence run configs.
Strict validation: unknown keys are rejected at every nesting level.
"""
from collections.abc import Mapping

import numpy as np
from rest_framework import serializers

from .services.defaults import setting
from .services.profiles import Mode, PlaneFunction, ProfileError, SeparableField, VProfile

COMMANDS = ('transform', 'invert', 'monopole', 'metric', 'disks', 'geodesics', 'roundtrip')

MACHINE_EPSILON = float(np.finfo(float).eps)


class StrictFieldsMixin:
    """Reject keys that are not declared fields"""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ['Unknown field.'] for key in unknown})
        return super().to_internal_value(data)


class ProfileField(serializers.Field):
    """A v-profile given as shorthand string or mapping"""

    def to_internal_value(self, data):
        try:
            return VProfile.from_spec(data)
        except ProfileError as e:
            raise serializers.ValidationError(str(e))

    def to_representation(self, value):
        return value.to_spec()


class ModeSerializer(StrictFieldsMixin, serializers.Serializer):
    """One Fourier mode of h"""
    k = serializers.IntegerField(min_value=0)
    cos = ProfileField(required=False)
    sin = ProfileField(required=False)

    def validate(self, data):
        try:
            data['mode'] = Mode(k=data['k'], cos_profile=data.get('cos') or VProfile.zero(),
                                sin_profile=data.get('sin'))
        except ProfileError as e:
            raise serializers.ValidationError(str(e))
        return data


class GridSpecSerializer(StrictFieldsMixin, serializers.Serializer):
    """Sampling ranges and resolutions"""
    t_range = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                    default=[-1.0, 1.0])
    x_half = serializers.FloatField(min_value=MACHINE_EPSILON, default=2.0)
    n_points = serializers.IntegerField(min_value=1, default=100)
    n_grid = serializers.IntegerField(min_value=1, default=21)
    t_values = serializers.ListField(child=serializers.FloatField(), min_length=1, default=[0.0])
    n_theta = serializers.IntegerField(min_value=16, required=False)
    n_v = serializers.IntegerField(min_value=5, required=False)
    v_max = serializers.FloatField(min_value=MACHINE_EPSILON, required=False)
    n_s = serializers.IntegerField(min_value=2, required=False)
    fourier_k = serializers.IntegerField(min_value=1, required=False)
    steps = serializers.ListField(child=serializers.FloatField(min_value=MACHINE_EPSILON), min_length=2,
                                  default=[1e-2, 5e-3, 2.5e-3])
    points = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=4, max_length=4),
        min_length=1, default=[[0.0, 0.1, 0.2, -0.1]],
    )
    box = serializers.FloatField(min_value=MACHINE_EPSILON, default=3.0)
    n_box = serializers.IntegerField(min_value=1, default=61)
    n_pairs = serializers.IntegerField(min_value=1, default=10000)
    n_directions = serializers.IntegerField(min_value=1, default=10000)
    evolution_time = serializers.FloatField(min_value=MACHINE_EPSILON, default=1.0)

    def validate_t_range(self, value):
        if value[0] >= value[1]:
            raise serializers.ValidationError("t_range must be increasing")
        return value

    def validate_steps(self, value):
        if any(a <= b for a, b in zip(value, value[1:])):
            raise serializers.ValidationError("steps must be strictly decreasing")
        return value

    def validate(self, data):
        for name, key in (('n_theta', 'TWISTOR_N_THETA'), ('n_v', 'TWISTOR_N_V'), ('v_max', 'TWISTOR_V_MAX'),
                          ('n_s', 'TWISTOR_N_S'), ('fourier_k', 'TWISTOR_FOURIER_K')):
            data.setdefault(name, setting(key))
        if data['n_theta'] % 2:
            raise serializers.ValidationError({'n_theta': "n_theta must be even"})
        return data


class MonopoleSpecSerializer(StrictFieldsMixin, serializers.Serializer):
    """An explicit potential and/or gauge function instead of (or on top of) h"""
    potential = serializers.CharField(required=False)
    gauge = serializers.CharField(required=False)

    def _check_field(self, value):
        try:
            SeparableField.from_spec(value)
        except ProfileError as e:
            raise serializers.ValidationError(str(e))
        return value

    def validate_potential(self, value):
        return self._check_field(value)

    def validate_gauge(self, value):
        return self._check_field(value)


class RunConfigSerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for a declarative run description"""
    command = serializers.ChoiceField(choices=COMMANDS)
    h_spec = ModeSerializer(many=True, required=False)
    grid_spec = GridSpecSerializer(required=False)
    tolerances = serializers.DictField(child=serializers.FloatField(min_value=MACHINE_EPSILON), required=False)
    output = serializers.CharField(required=False, allow_blank=False)
    seed = serializers.IntegerField(min_value=0, required=False)
    plane = serializers.CharField(required=False)
    monopole = MonopoleSpecSerializer(required=False)
    controls = serializers.BooleanField(default=True)

    def __init__(self, *args, known_tolerances=(), **kwargs):
        super().__init__(*args, **kwargs)
        self.known_tolerances = set(known_tolerances)

    def validate_tolerances(self, value):
        unknown = sorted(set(value) - self.known_tolerances)
        if unknown:
            raise serializers.ValidationError(f"Unknown tolerances: {', '.join(unknown)}")
        return value

    def validate_plane(self, value):
        try:
            PlaneFunction.from_spec(value)
        except ProfileError as e:
            raise serializers.ValidationError(str(e))
        return value

    def validate(self, data):
        if data.get('grid_spec') is None:
            grid = GridSpecSerializer(data={})
            grid.is_valid(raise_exception=True)
            data['grid_spec'] = grid.validated_data
        return data
