import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "om_planner.settings")
django.setup()
