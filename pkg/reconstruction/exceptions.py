"""
Ієрархія винятків конвеєра реконструкції
"""


class OasisError(Exception):
    """Базовий виняток конвеєра"""


class InputError(OasisError):
    """Некоректні вхідні дані (журнал кадрів, файли зображень)"""


class FrameLogError(InputError):
    """Журнал кадрів відсутній або пошкоджений"""


class MalformedFrameError(InputError):
    """Кадр не вдалося декодувати або його розмір не збігається з параметрами сенсора"""

    def __init__(self, message, frame_index=None):
        super().__init__(message)
        self.frame_index = frame_index


class MissingPoseError(InputError):
    """Кадр сонара без пози - обробку зупиняємо"""

    def __init__(self, frame_index):
        super().__init__(f"Кадр #{frame_index} не містить пози сенсора")
        self.frame_index = frame_index


class ConfigError(OasisError):
    """Некоректна конфігурація конвеєра"""


class TemplateTooLargeError(OasisError, ValueError):
    """Розмір вокселя занадто малий відносно роздільності сонара по дальності"""
