"""
Configures django for pytest the same way runtests.py does for the django test runner.
"""
import os
import sys

import django

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tests.settings')
django.setup()
