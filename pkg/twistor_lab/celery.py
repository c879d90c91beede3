"""
Celery app for asynchronous twistor runs.
Settings prefixed CELERY_ in twistor_lab.settings configure the worker.
"""
import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'twistor_lab.settings')

app = Celery('twistor_lab')
app.config_from_object('django.conf:settings', namespace='CELERY')

# picks up correspondence.tasks
app.autodiscover_tasks()
