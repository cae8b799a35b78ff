# core/schemas/training.py
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

TRAINING_LOG_HEADER = (
    'epoch',
    'train_loss',
    'val_psnr',
    'val_ssim',
    'diverged_count',
    'wall_time_s',
)

LEARNABLE_GROUPS = ('theta', 'lam', 'tau', 'alpha', 'sigma')


class TrainConfig(BaseModel):
    """Параметры обучения (Adam, ранняя остановка, обучаемые группы)"""

    learning_rate: float = Field(1e-5, ge=0)
    max_epochs: int = Field(500, ge=0)
    patience: int = Field(25, ge=1)
    loss: Literal['mse'] = 'mse'
    learn_theta: bool = True
    learn_lam: bool = True
    learn_tau: bool = True
    learn_alpha: bool = True
    learn_sigma: bool = True
    seed: int = 0
    num_workers: int = Field(1, ge=1)
    checkpoint_dir: Optional[str] = None

    model_config = ConfigDict(extra='forbid')

    @model_validator(mode='after')
    def _check_patience(self):
        if self.max_epochs and self.patience > self.max_epochs:
            raise ValueError('patience must not exceed max_epochs')
        return self

    def learned_groups(self) -> List[str]:
        return [g for g in LEARNABLE_GROUPS if getattr(self, f'learn_{g}')]


class EpochRecord(BaseModel):
    """Строка журнала обучения"""

    epoch: int
    train_loss: float
    val_psnr: float
    val_ssim: float
    diverged_count: int = 0
    wall_time_s: float = 0.0

    def csv_row(self) -> dict:
        return {
            'epoch': self.epoch,
            'train_loss': repr(self.train_loss),
            'val_psnr': repr(self.val_psnr),
            'val_ssim': repr(self.val_ssim),
            'diverged_count': self.diverged_count,
            'wall_time_s': repr(self.wall_time_s),
        }
