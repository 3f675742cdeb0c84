from django.apps import AppConfig


class MilpAppConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "milp"
