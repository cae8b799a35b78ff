# core/__init__.py
from . import config  # noqa: F401  (float64 по умолчанию до любых вычислений)
