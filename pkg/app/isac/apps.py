from django.apps import AppConfig


class IsacConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "isac"
    verbose_name = "Movable-antenna ISAC"
