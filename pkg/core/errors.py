# core/errors.py - Ошибки с устойчивыми error_code
from typing import Any, Optional


class ShapeMismatchError(ValueError):
    """Несовпадение форм сеток / измерений"""

    error_code = 'SHAPE_MISMATCH'


class UnsupportedProxError(ValueError):
    """У модели нет prox в замкнутой форме"""

    error_code = 'UNSUPPORTED_PROX'


class DomainError(ValueError):
    """Аргумент вне области определения операции"""

    error_code = 'INVALID_ARGUMENT'


class ConfigError(ValueError):
    """Ошибка разбора или валидации конфигурации"""

    error_code = 'CONFIG_ERROR'


class DivergenceError(RuntimeError):
    """Итерации разошлись; частичная траектория сохраняется"""

    error_code = 'DIVERGED'

    def __init__(self, message: str, trajectory: Optional[Any] = None):
        super().__init__(message)
        self.trajectory = trajectory


class TrainingInstabilityError(RuntimeError):
    """Неконечный JFB-градиент"""

    error_code = 'TRAINING_UNSTABLE'

    def __init__(self, message: str, record: Optional[dict] = None):
        super().__init__(message)
        self.record = record or {}
