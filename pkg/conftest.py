"""
Shared pytest fixtures for the twistor correspondence tests.
"""
import json

import numpy as np
import pytest

from correspondence.services.profiles import CylinderFunction, VProfile


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def cos_gaussian():
    """cos(theta) exp(-v^2)"""
    return CylinderFunction.single_mode(1, cos=VProfile.gaussian(), label='cos_gaussian')


@pytest.fixture
def weak_cos_gaussian():
    """0.1 cos(theta) exp(-v^2)"""
    return CylinderFunction.single_mode(1, cos=VProfile.gaussian(0.1), label='weak_cos_gaussian')


@pytest.fixture
def reference_h():
    """
    cos(theta) H4 + sin(theta) H5 with Hermite-Gaussian profiles of width 1.5.
    Vanishing low moments make its Cauchy data decay fast enough for Radon sampling.
    """
    return CylinderFunction.single_mode(
        1,
        cos=VProfile.hermite_gaussian(4, 1.0 / 12.0, 0.0, 1.5),
        sin=VProfile.hermite_gaussian(5, 0.05, 0.0, 1.5),
        label='reference',
    )


@pytest.fixture
def write_config(tmp_path):
    def _write(payload, name='config.json'):
        path = tmp_path / name
        path.write_text(json.dumps(payload, indent=2))
        return path
    return _write
