from django.apps import AppConfig


class AlgebraConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "algebra"
    verbose_name = "Tensor spaces, partitions and operator sequences"
