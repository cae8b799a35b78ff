# core/api/routes/__init__.py
from . import bench, data, rate, solve, train

ROUTES = [data, solve, train, bench, rate]

__all__ = ['ROUTES']
