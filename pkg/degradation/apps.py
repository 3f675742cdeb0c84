from django.apps import AppConfig


class DegradationConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "degradation"
