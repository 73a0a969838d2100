"""Ініціалізація Django для запуску тестів через pytest."""
import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "oasis_recon.settings")
django.setup()
