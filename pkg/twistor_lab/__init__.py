# Load the Celery app with Django so run_config_task binds to it.
try:
    from .celery import app as celery_app
    __all__ = ('celery_app',)
except ImportError:
    # runs without celery stay synchronous
    pass
