from django.apps import AppConfig


class ObservablesConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "observables"
