# core/schemas/solver.py
import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# ------------------- СХЕМЫ РЕШАТЕЛЕЙ -------------------


class Scheme(str, Enum):
    """Итерационные схемы и развёрнутые базовые линии"""

    IDEQ_GRAD = 'ideq-grad'
    IDEQ_PROX = 'ideq-prox'
    RED = 'red'
    RED_PROX = 'red-prox'
    DEQ_BACKTRACKING = 'deq-backtracking'
    MODL = 'modl'
    VARNET = 'varnet'

    @property
    def uses_prox(self) -> bool:
        return self in (Scheme.IDEQ_PROX, Scheme.RED_PROX, Scheme.MODL)

    @property
    def is_unrolled(self) -> bool:
        return self in (Scheme.MODL, Scheme.VARNET)

    @property
    def is_inertial(self) -> bool:
        return self in (Scheme.IDEQ_GRAD, Scheme.IDEQ_PROX)


class RestartMode(str, Enum):
    AUTO = 'auto'
    FULL = 'full'  # x_prev, x_curr, k сбрасываются
    SHIFT = 'shift'  # только x_prev <- x_curr, k продолжает счёт


class BudgetMode(str, Enum):
    WINDOW = 'window'  # k_since_restart <= K
    TOTAL = 'total'  # ровно K+1 глобальных итераций


UNROLLED_STEPS = 6


def parse_budget(value):
    """'inf' / '∞' / None -> math.inf"""
    if value is None:
        return math.inf
    if isinstance(value, str) and value.strip().lower() in ('inf', '+inf', 'infinity', '∞'):
        return math.inf
    return value


class SolverConfig(BaseModel):
    """Параметры решателя (lam, tau, alpha, B, K, eps)"""

    scheme: Scheme = Scheme.IDEQ_GRAD
    lam: float = Field(1.0, ge=0, description='вес регуляризации')
    tau: float = Field(0.5, gt=0, description='шаг')
    alpha: float = Field(0.2, gt=0, le=1, description='инерция')
    restart_budget: float = Field(math.inf, ge=0, description='B, порог рестарта')
    max_iter: int = Field(100, ge=1, description='K, бюджет итераций')
    tol: float = Field(1e-4, ge=0, description='eps, относительная невязка')
    averaging: bool = False
    restart_mode: RestartMode = RestartMode.AUTO
    budget_mode: BudgetMode = BudgetMode.WINDOW
    max_total_iter: Optional[int] = Field(None, ge=1)
    track_objective: bool = True
    unrolled_steps: int = Field(UNROLLED_STEPS, ge=1)

    model_config = ConfigDict(extra='forbid', use_enum_values=False)

    @field_validator('restart_budget', mode='before')
    @classmethod
    def _budget(cls, v):
        return parse_budget(v)

    @model_validator(mode='after')
    def _fill_cap(self):
        if self.max_total_iter is None:
            self.max_total_iter = 10 * (self.max_iter + 1)
        return self

    def effective_restart_mode(self) -> RestartMode:
        if self.restart_mode != RestartMode.AUTO:
            return self.restart_mode
        return RestartMode.SHIFT if self.scheme.uses_prox else RestartMode.FULL
