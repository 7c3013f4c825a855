import os

from django.conf import settings

# Library can be used without a django project: statsd and config need configured settings
if not settings.configured and 'DJANGO_SETTINGS_MODULE' not in os.environ:
    settings.configure()

__version__ = '0.3.0'
