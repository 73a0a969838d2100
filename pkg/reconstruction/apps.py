from django.apps import AppConfig
import logging

logger = logging.getLogger(__name__)

class ReconstructionConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "reconstruction"
    verbose_name = "Опто-акустична 3D реконструкція"

    def ready(self):
        """Викликається коли додаток готовий до роботи"""
        logger.debug("Додаток reconstruction ініціалізовано")
