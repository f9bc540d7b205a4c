# foliation/apps.py
from django.apps import AppConfig

class FoliationConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "foliation"
