"""
Django settings for twistor_lab project.
"""

from pathlib import Path
from decouple import config
import dj_database_url

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-change-me')

DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = ['localhost', '127.0.0.1']

# Application definition
DJANGO_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
]

THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    'correspondence',
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# Database (run records only)
DATABASES = {
    'default': dj_database_url.parse(
        config('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}")
    )
}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Celery Configuration
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=False, cast=bool)

# Numerical defaults
# v-grid for sampled cylinder data; Gaussian tails are below 1e-14 at |v| = 8
TWISTOR_V_MAX = config('TWISTOR_V_MAX', default=8.0, cast=float)
TWISTOR_N_V = config('TWISTOR_N_V', default=1024, cast=int)
TWISTOR_N_THETA = config('TWISTOR_N_THETA', default=256, cast=int)
TWISTOR_N_S = config('TWISTOR_N_S', default=321, cast=int)
# line integrals of plane functions are truncated to |s| <= this
TWISTOR_RADON_HALF_LENGTH = config('TWISTOR_RADON_HALF_LENGTH', default=8.0, cast=float)
TWISTOR_FOURIER_K = config('TWISTOR_FOURIER_K', default=32, cast=int)
TWISTOR_DEFAULT_SEED = config('TWISTOR_DEFAULT_SEED', default=42, cast=int)

# Gauge fixing (Poisson solve on the initial plane)
TWISTOR_POISSON_HALF_WIDTH = config('TWISTOR_POISSON_HALF_WIDTH', default=8.0, cast=float)
TWISTOR_POISSON_SPACING = config('TWISTOR_POISSON_SPACING', default=0.05, cast=float)
TWISTOR_POISSON_REFINEMENTS = config('TWISTOR_POISSON_REFINEMENTS', default=2, cast=int)

# Finite differences
TWISTOR_CURVATURE_STEP = config('TWISTOR_CURVATURE_STEP', default=1e-3, cast=float)
TWISTOR_FD_SPACING = config('TWISTOR_FD_SPACING', default=0.025, cast=float)

# Tolerances
TWISTOR_CURL_TOLERANCE = config('TWISTOR_CURL_TOLERANCE', default=1e-6, cast=float)
TWISTOR_POISSON_TOLERANCE = config('TWISTOR_POISSON_TOLERANCE', default=1e-4, cast=float)
TWISTOR_NULL_TOLERANCE = config('TWISTOR_NULL_TOLERANCE', default=1e-9, cast=float)

# Reports
TWISTOR_REPORT_DIR = config('TWISTOR_REPORT_DIR', default='reports')
TWISTOR_PERSIST_RUNS = config('TWISTOR_PERSIST_RUNS', default=False, cast=bool)

LOG_DIR = BASE_DIR / 'logs'
LOG_DIR.mkdir(exist_ok=True)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': LOG_DIR / 'twistor.log',
            'formatter': 'verbose',
        },
        'console': {
            'level': config('TWISTOR_CONSOLE_LOG_LEVEL', default='WARNING'),
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'INFO',
    },
    'loggers': {
        'correspondence': {
            'handlers': ['console', 'file'],
            'level': 'DEBUG',
            'propagate': False,
        },
    },
}
