# core/api/deps.py - Зависимости команд
from pathlib import Path
from typing import Optional

from ..config import settings
from ..errors import ConfigError
from ..schemas.experiment import ExperimentConfig
from ..schemas.solver import Scheme
from ..services.DatasetService import DatasetService
from ..services.ExperimentService import ExperimentService

# ------------------- СЕРВИСЫ -------------------


def get_experiment_service() -> ExperimentService:
    return ExperimentService()


def get_dataset_service() -> DatasetService:
    return DatasetService()


# ------------------- КОНФИГ -------------------


def load_config(args) -> ExperimentConfig:
    """Конфиг из --config с переопределениями --seed / --scheme / --out"""
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if getattr(args, 'scheme', None):
        try:
            overrides['scheme'] = Scheme(args.scheme)
        except ValueError as e:
            raise ConfigError(f'unknown scheme {args.scheme!r}') from e
    if args.out:
        overrides['output_dir'] = args.out
    return config.with_overrides(**overrides) if overrides else config


def resolve_out_dir(args, command: str, config: Optional[ExperimentConfig] = None) -> Path:
    if args.out:
        return Path(args.out)
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(settings.OUTPUT_DIR) / command
