import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'TorusFol.settings')
django.setup()
