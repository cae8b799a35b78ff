# core/schemas/experiment.py
import io
import math
from pathlib import Path
from typing import ClassVar, Dict, List, Literal, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError
from .solver import BudgetMode, RestartMode, Scheme, SolverConfig, parse_budget
from .training import TrainConfig

Preset = Tuple[float, float, float, Optional[float], Optional[float]]  # lam, sigma, tau, alpha, B


class ExperimentConfig(BaseModel):
    """
    Плоский key=value конфиг эксперимента.

    Пустые lam / sigma / tau / alpha / restart_budget заполняются из PRESETS
    по (problem, preset); для rician берётся ближайший табличный уровень шума.
    """

    # (problem, preset[, noise*255]) -> (lam, sigma, tau, alpha, B); None = «/» (нет инерции)
    PRESETS: ClassVar[Dict[tuple, Preset]] = {
        ('mri', 'risp'): (0.65, 0.03, 0.5, 0.2, 5000.0),
        ('mri', 'risp-prox'): (0.80, 0.02, 1.0, 0.2, 5000.0),
        ('mri', 'red'): (0.80, 0.05, 0.5, None, None),
        ('mri', 'red-prox'): (0.80, 0.03, 1.0, None, None),
        ('mri', 'ideq'): (0.65, 0.03, 0.5, 0.2, 100.0),
        ('mri', 'deq'): (0.83, 0.03, 2.0, None, None),
        ('mri', 'deq-arb-init'): (0.83, 0.0, 2.0, None, None),
        ('inpainting', 'risp'): (0.83, 0.03, 0.1, 0.2, 5000.0),
        ('inpainting', 'ideq'): (0.83, 0.03, 0.1, 0.2, 500.0),
        ('inpainting', 'deq'): (0.83, 0.03, 2.0, None, None),
        ('rician', 'risp', 25.5): (3.6, 0.03, 0.03, 0.01, 100.0),
        ('rician', 'risp', 12.75): (10.0, 0.02, 0.03, 0.01, 100.0),
        ('rician', 'ideq', 25.5): (6.0, 0.02, 0.03, 0.2, 300.0),
        ('rician', 'ideq', 12.75): (10.0, 0.02, 0.03, 0.2, 100.0),
        ('*', 'arb-init'): (0.10, 0.0, 1.0, 0.2, 100.0),
    }

    # Задача
    problem: Literal['mri', 'inpainting', 'rician'] = 'inpainting'
    acceleration: float = Field(8.0, ge=1)
    keep_prob: float = Field(0.5, gt=0, le=1)
    noise_level: float = Field(1.0 / 255.0, ge=0)

    # Решатель
    scheme: Scheme = Scheme.IDEQ_GRAD
    preset: Optional[str] = None
    lam: Optional[float] = Field(None, ge=0)
    sigma: Optional[float] = Field(None, ge=0)
    tau: Optional[float] = Field(None, gt=0)
    alpha: Optional[float] = Field(None, gt=0, le=1)
    restart_budget: Optional[float] = Field(None, ge=0)
    max_iter: int = Field(100, ge=1)
    tol: float = Field(1e-4, ge=0)
    averaging: bool = False
    restart_mode: RestartMode = RestartMode.AUTO
    budget_mode: BudgetMode = BudgetMode.WINDOW
    unrolled_steps: int = Field(6, ge=1)

    # Регуляризатор
    regularizer: Literal['gradstep', 'tikhonov', 'smoothed-tv'] = 'gradstep'
    checkpoint: Optional[str] = None
    mu: float = Field(1.0, ge=0)
    delta: float = Field(0.1, gt=0)
    net_channels: str = '1,8,8,1'
    net_seed: int = 0
    noise_channel: bool = True
    padding: Literal['zeros', 'circular'] = 'zeros'

    # Данные
    dataset: Optional[str] = None
    generator: Literal['piecewise-constant', 'smooth-bump', 'shepp-like-phantom'] = 'piecewise-constant'
    image_count: int = Field(4, ge=0)
    val_count: int = Field(4, ge=0)
    image_size: int = Field(16, ge=8)

    # Обучение
    learning_rate: float = Field(1e-5, ge=0)
    max_epochs: int = Field(500, ge=0)
    patience: int = Field(25, ge=1)
    learn_theta: bool = True
    learn_lam: bool = True
    learn_tau: bool = True
    learn_alpha: bool = True
    learn_sigma: bool = True

    # Сравнение и оценка скорости
    bench_schemes: str = ''
    rate_window_start: int = Field(20, ge=1)
    rate_window_end: Optional[int] = Field(None, ge=2)

    seed: int = 0
    output_dir: Optional[str] = None

    model_config = ConfigDict(extra='forbid')

    @field_validator('restart_budget', mode='before')
    @classmethod
    def _budget(cls, v):
        if v is None or v == '':
            return None
        return parse_budget(v)

    @field_validator(
        'preset', 'checkpoint', 'dataset', 'output_dir', 'lam', 'sigma', 'tau', 'alpha',
        'rate_window_end', mode='before',
    )
    @classmethod
    def _empty_is_none(cls, v):
        return None if v == '' else v

    @model_validator(mode='after')
    def _apply_preset(self):
        if self.preset is None:
            return self
        values = self.lookup_preset(self.problem, self.preset, self.noise_level)
        for name, value in zip(('lam', 'sigma', 'tau', 'alpha', 'restart_budget'), values):
            if getattr(self, name) is None:
                if value is None:
                    # «/» в таблице: без инерции и рестартов
                    value = 1.0 if name == 'alpha' else math.inf
                setattr(self, name, value)
        return self

    @classmethod
    def lookup_preset(cls, problem: str, preset: str, noise_level: float) -> Preset:
        if ('*', preset) in cls.PRESETS:
            return cls.PRESETS[('*', preset)]
        if (problem, preset) in cls.PRESETS:
            return cls.PRESETS[(problem, preset)]
        levels = [key[2] for key in cls.PRESETS if key[:2] == (problem, preset) and len(key) == 3]
        if not levels:
            raise ValueError(f'unknown preset {preset!r} for problem {problem!r}')
        nearest = min(levels, key=lambda level: abs(level - noise_level * 255.0))
        return cls.PRESETS[(problem, preset, nearest)]

    # ------------------- Разбор / сериализация -------------------

    @classmethod
    def parse_text(cls, text: str) -> 'ExperimentConfig':
        values = dotenv_values(stream=io.StringIO(text), interpolate=False)
        return cls.from_mapping(values)

    @classmethod
    def from_file(cls, path) -> 'ExperimentConfig':
        if not Path(path).is_file():
            raise ConfigError(f'config file not found: {path}')
        return cls.from_mapping(dotenv_values(path, interpolate=False))

    @classmethod
    def from_mapping(cls, values: Dict[str, Optional[str]]) -> 'ExperimentConfig':
        cleaned = {k.strip(): v for k, v in values.items() if v is not None}
        try:
            return cls.model_validate(cleaned)
        except ValidationError as e:
            raise ConfigError(f'invalid experiment config: {e}') from e

    def serialize(self) -> str:
        lines = []
        for name in type(self).model_fields:
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, bool):
                text = 'true' if value else 'false'
            elif hasattr(value, 'value'):
                text = value.value
            elif isinstance(value, float):
                text = 'inf' if math.isinf(value) else repr(value)
            else:
                text = str(value)
            lines.append(f'{name}={text}')
        return '\n'.join(lines) + '\n'

    def with_overrides(self, **overrides) -> 'ExperimentConfig':
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return type(self).model_validate(data)
        except ValidationError as e:
            raise ConfigError(f'invalid override: {e}') from e

    # ------------------- Производные конфиги -------------------

    def solver_config(self, scheme: Optional[Scheme] = None) -> SolverConfig:
        return SolverConfig(
            scheme=scheme or self.scheme,
            lam=1.0 if self.lam is None else self.lam,
            tau=0.5 if self.tau is None else self.tau,
            alpha=0.2 if self.alpha is None else self.alpha,
            restart_budget=math.inf if self.restart_budget is None else self.restart_budget,
            max_iter=self.max_iter,
            tol=self.tol,
            averaging=self.averaging,
            restart_mode=self.restart_mode,
            budget_mode=self.budget_mode,
            unrolled_steps=self.unrolled_steps,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            max_epochs=self.max_epochs,
            patience=min(self.patience, max(1, self.max_epochs)),
            learn_theta=self.learn_theta,
            learn_lam=self.learn_lam,
            learn_tau=self.learn_tau,
            learn_alpha=self.learn_alpha,
            learn_sigma=self.learn_sigma,
            seed=self.seed,
        )

    def channels(self) -> Tuple[int, ...]:
        try:
            return tuple(int(c) for c in self.net_channels.split(','))
        except ValueError as e:
            raise ConfigError(f'net_channels must be a comma list of ints: {self.net_channels!r}') from e

    def bench_scheme_list(self) -> List[Scheme]:
        names = [s.strip() for s in self.bench_schemes.split(',') if s.strip()]
        try:
            return [Scheme(name) for name in names]
        except ValueError as e:
            raise ConfigError(f'unknown scheme in bench_schemes: {e}') from e
