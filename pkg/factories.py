"""
factory-boy factories for profiles, cylinder functions, plane functions and
run-config payloads used across the tests.
"""
import factory

from correspondence.models import RunRecord
from correspondence.services.profiles import CylinderFunction, Mode, PlaneFunction, VProfile


class VProfileFactory(factory.Factory):
    class Meta:
        model = VProfile

    kind = 'gaussian_poly'
    coefficients = (1.0,)
    center = 0.0
    width = 1.0


class SechProfileFactory(VProfileFactory):
    kind = 'sech_pow'
    amplitude = 0.5
    power = 2.0


class ModeFactory(factory.Factory):
    class Meta:
        model = Mode

    k = 1
    cos_profile = factory.SubFactory(VProfileFactory)
    sin_profile = None


class CylinderFunctionFactory(factory.Factory):
    class Meta:
        model = CylinderFunction

    modes = factory.LazyFunction(lambda: (ModeFactory(),))
    label = factory.Sequence(lambda n: f"h{n}")


class PlaneFunctionFactory(factory.Factory):
    """Gaussian plane functions amplitude * exp(-|x|^2 / width^2)."""
    class Meta:
        model = PlaneFunction

    amplitude = 1.0
    width = 1.0

    @classmethod
    def _build(cls, model_class, amplitude, width):
        return model_class.gaussian(amplitude=amplitude, width=width)

    @classmethod
    def _create(cls, model_class, amplitude, width):
        return cls._build(model_class, amplitude, width)


class RunConfigPayloadFactory(factory.DictFactory):
    """A JSON-ready run config."""
    command = 'transform'
    h_spec = factory.LazyFunction(lambda: [{'k': 1, 'cos': 'gaussian(1,0,1)'}])
    grid_spec = factory.LazyFunction(lambda: {'n_points': 10, 'n_grid': 5})
    seed = 42


class RunRecordFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = RunRecord

    command = 'transform'
    seed = 42
    passed = True
    determinism_hash = factory.Sequence(lambda n: f"{n:064x}")
    output_dir = 'reports/transform'
    report = factory.LazyFunction(lambda: {'schema_version': '1.0', 'checks': []})
