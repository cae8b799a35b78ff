# core/api/main.py
import argparse
import logging
from typing import Optional, Sequence

from pydantic import ValidationError

from ..errors import ConfigError, DivergenceError, DomainError
from .routes import ROUTES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_DIVERGED = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=None, help='key=value файл эксперимента')
    common.add_argument('--seed', type=int, default=None)
    common.add_argument('--out', default=None, help='каталог результатов')
    common.add_argument('--scheme', default=None, help='переопределение схемы')

    parser = argparse.ArgumentParser(
        prog='ideq', description='Инерциальные DEQ: решатели, обучение и сравнение'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    for route in ROUTES:
        route.add_parser(subparsers, common)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Разбор аргументов и запуск команды; возвращает код выхода"""
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except DivergenceError as e:
        logger.error(f'[{e.error_code}] {e}')
        return EXIT_DIVERGED
    except (ConfigError, DomainError, ValidationError) as e:
        code = getattr(e, 'error_code', 'CONFIG_ERROR')
        logger.error(f'[{code}] {e}')
        return EXIT_CONFIG_ERROR
