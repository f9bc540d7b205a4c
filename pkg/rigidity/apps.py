# rigidity/apps.py
from django.apps import AppConfig

class RigidityConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "rigidity"
