# straighten/apps.py
from django.apps import AppConfig

class StraightenConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "straighten"
