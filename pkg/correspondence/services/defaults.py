"""
Numerical defaults for the correspondence services.
Reads TWISTOR_* values from Django settings, falling back to the same
defaults when settings are not configured (plain library use).
"""
from typing import Any

from django.conf import settings

DEFAULTS = {
    'TWISTOR_V_MAX': 8.0,
    'TWISTOR_N_V': 1024,
    'TWISTOR_N_THETA': 256,
    'TWISTOR_N_S': 321,
    'TWISTOR_RADON_HALF_LENGTH': 8.0,
    'TWISTOR_FOURIER_K': 32,
    'TWISTOR_DEFAULT_SEED': 42,
    'TWISTOR_POISSON_HALF_WIDTH': 8.0,
    'TWISTOR_POISSON_SPACING': 0.05,
    'TWISTOR_POISSON_REFINEMENTS': 2,
    'TWISTOR_CURVATURE_STEP': 1e-3,
    'TWISTOR_FD_SPACING': 0.025,
    'TWISTOR_CURL_TOLERANCE': 1e-6,
    'TWISTOR_POISSON_TOLERANCE': 1e-4,
    'TWISTOR_NULL_TOLERANCE': 1e-9,
    'TWISTOR_REPORT_DIR': 'reports',
    'TWISTOR_PERSIST_RUNS': False,
}


def setting(name: str) -> Any:
    """Look up a TWISTOR_* setting."""
    default = DEFAULTS[name]
    if not settings.configured:
        return default
    return getattr(settings, name, default)
