# core/api/__init__.py
from .main import build_parser, run

__all__ = ['build_parser', 'run']
