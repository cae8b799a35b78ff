import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import torch
from tqdm import tqdm

from ..config import settings
from ..errors import DivergenceError, TrainingInstabilityError
from ..models.base import DataFidelity
from ..models.checkpoint import Checkpoint, save_checkpoint
from ..models.regularizer import GradStepRegularizer
from ..numerics.grid import SeededRng, check_same_shape
from ..numerics.metrics import psnr, safe_ssim
from ..schemas.solver import Scheme, SolverConfig
from ..schemas.training import TRAINING_LOG_HEADER, EpochRecord, TrainConfig
from .SolverService import SolverService

logger = logging.getLogger(__name__)


@dataclass
class TrainingPair:
    """Измерение, эталон и модель данных одного экземпляра"""

    y: torch.Tensor
    x_star: torch.Tensor
    fidelity: DataFidelity


@dataclass
class TrainingResult:
    best: Checkpoint
    log: List[EpochRecord] = field(default_factory=list)
    diverged_total: int = 0


def mse_loss(x_hat: torch.Tensor, x_star: torch.Tensor) -> torch.Tensor:
    check_same_shape(x_hat, x_star, 'estimate and reference')
    return ((x_hat - x_star) ** 2).mean()


class LearnableParameters:
    """
    Theta = (theta, lam, tau, alpha, sigma) в неограниченных координатах:
    lam, tau, sigma = exp(raw), alpha = sigmoid(raw).

    Плоский вектор: параметры сети в раскладке net.layout(), затем
    raw_lam, raw_tau, raw_alpha, raw_sigma.
    """

    SCALARS = ('lam', 'tau', 'alpha', 'sigma')
    SIGMA_FLOOR = 1e-4
    ALPHA_CEIL = 1.0 - 1e-6

    def __init__(self, reg: GradStepRegularizer, lam: float, tau: float, alpha: float, sigma: float):
        self.reg = reg
        alpha = min(max(float(alpha), 1e-6), self.ALPHA_CEIL)
        self.raw = {
            'lam': torch.tensor(math.log(max(float(lam), 1e-12)), requires_grad=True),
            'tau': torch.tensor(math.log(float(tau)), requires_grad=True),
            'alpha': torch.tensor(math.log(alpha / (1.0 - alpha)), requires_grad=True),
            'sigma': torch.tensor(math.log(max(float(sigma), self.SIGMA_FLOOR)), requires_grad=True),
        }

    @property
    def net_size(self) -> int:
        return self.reg.net.num_parameters()

    def constrained(self) -> Dict[str, torch.Tensor]:
        return {
            'lam': torch.exp(self.raw['lam']),
            'tau': torch.exp(self.raw['tau']),
            'alpha': torch.sigmoid(self.raw['alpha']),
            'sigma': torch.exp(self.raw['sigma']),
        }

    def values(self) -> Dict[str, float]:
        with torch.no_grad():
            return {name: float(v) for name, v in self.constrained().items()}

    def tensors(self) -> List[torch.Tensor]:
        return list(self.reg.net.parameters()) + [self.raw[name] for name in self.SCALARS]

    def flat(self) -> torch.Tensor:
        raws = torch.stack([self.raw[name].detach() for name in self.SCALARS])
        return torch.cat([self.reg.net.get_flat(), raws])

    def set_flat(self, flat: torch.Tensor) -> None:
        n = self.net_size
        self.reg.net.set_flat(flat[:n])
        with torch.no_grad():
            for i, name in enumerate(self.SCALARS):
                self.raw[name].copy_(flat[n + i])
        self.reg.sigma = self.values()['sigma']

    def group_mask(self, config: TrainConfig) -> torch.Tensor:
        scalars = [float(getattr(config, f'learn_{name}')) for name in self.SCALARS]
        return torch.cat([
            torch.full((self.net_size,), float(config.learn_theta)),
            torch.tensor(scalars),
        ])


@dataclass
class AdamState:
    """Обёртка над torch.optim.Adam для одного плоского вектора параметров"""

    param: torch.Tensor
    optimizer: torch.optim.Adam

    BETAS = (0.9, 0.999)
    EPS = 1e-8

    @classmethod
    def create(cls, params: torch.Tensor, lr: float) -> 'AdamState':
        param = params.detach().clone().requires_grad_(True)
        return cls(param, torch.optim.Adam([param], lr=lr, betas=cls.BETAS, eps=cls.EPS))

    def _slot(self, key: str):
        return self.optimizer.state.get(self.param, {}).get(key)

    @property
    def m(self) -> torch.Tensor:
        slot = self._slot('exp_avg')
        return torch.zeros_like(self.param) if slot is None else slot.clone()

    @property
    def v(self) -> torch.Tensor:
        slot = self._slot('exp_avg_sq')
        return torch.zeros_like(self.param) if slot is None else slot.clone()

    @property
    def t(self) -> int:
        step = self._slot('step')
        return 0 if step is None else int(step)


def adam_update(
    state: AdamState, params: torch.Tensor, grad: torch.Tensor, lr: float
) -> Tuple[AdamState, torch.Tensor]:
    """Один шаг Adam со смещённой коррекцией моментов"""
    check_same_shape(params, grad, 'parameters and gradient')
    with torch.no_grad():
        state.param.copy_(params)
    state.param.grad = grad.detach().clone()
    for group in state.optimizer.param_groups:
        group['lr'] = lr
    state.optimizer.step()
    state.param.grad = None
    return state, state.param.detach().clone()


class KahanAccumulator:
    """Компенсированное суммирование векторов"""

    def __init__(self, size: int):
        self.total = torch.zeros(size)
        self._comp = torch.zeros(size)

    def add(self, value: torch.Tensor) -> None:
        y = value - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t


class TrainingService:
    """Обучение Theta методом JFB: один шаг оператора в найденной неподвижной точке"""

    def __init__(self, solver: Optional[SolverService] = None):
        self.solver = solver or SolverService()

    # ------------------- Градиенты -------------------

    def apply_operator(
        self,
        scheme: Scheme,
        x_hat: torch.Tensor,
        y: torch.Tensor,
        fidelity: DataFidelity,
        reg: GradStepRegularizer,
        values: Dict[str, torch.Tensor],
    ) -> torch.Tensor:
        """T_Theta(x_hat, x_hat): инерция (нулевая в неподвижной точке) и шаг RED / RED-P"""
        z = self.solver.momentum_extrapolate(x_hat, x_hat, values['alpha'])
        step = self.solver.redp_step if scheme.uses_prox else self.solver.red_step
        return step(z, y, fidelity, reg, values['lam'], values['tau'], create_graph=True)

    def jfb_gradient(
        self,
        scheme: Scheme,
        x_hat: torch.Tensor,
        x_star: torch.Tensor,
        y: torch.Tensor,
        fidelity: DataFidelity,
        params: LearnableParameters,
    ) -> Tuple[float, torch.Tensor]:
        """
        (loss, grad) для l(T_Theta(x_hat), x_star) при замороженном x_hat.

        grad в раскладке LearnableParameters.flat().
        """
        x_hat = x_hat.detach()
        reg = params.reg
        saved_sigma = reg.sigma
        try:
            with torch.enable_grad():
                values = params.constrained()
                reg.sigma = values['sigma']
                out = self.apply_operator(scheme, x_hat, y, fidelity, reg, values)
                loss = mse_loss(out, x_star)
                grads = torch.autograd.grad(loss, params.tensors(), allow_unused=True)
        finally:
            reg.sigma = saved_sigma
        return self._pack(loss, grads, params)

    def unrolled_gradient(
        self,
        scheme: Scheme,
        x0: torch.Tensor,
        x_star: torch.Tensor,
        y: torch.Tensor,
        fidelity: DataFidelity,
        params: LearnableParameters,
        steps: int,
    ) -> Tuple[float, torch.Tensor]:
        """Полный backprop через `steps` развёрнутых шагов MoDL / VarNet"""
        reg = params.reg
        saved_sigma = reg.sigma
        try:
            with torch.enable_grad():
                values = params.constrained()
                reg.sigma = values['sigma']
                x = x0.detach()
                for _ in range(steps):
                    x = self.solver.unrolled_step(scheme, x, y, fidelity, reg, values['tau'])
                loss = mse_loss(x, x_star)
                grads = torch.autograd.grad(loss, params.tensors(), allow_unused=True)
        finally:
            reg.sigma = saved_sigma
        return self._pack(loss, grads, params)

    @staticmethod
    def _pack(loss, grads, params: LearnableParameters) -> Tuple[float, torch.Tensor]:
        loss = float(loss.detach())
        flat = torch.cat([
            (g if g is not None else torch.zeros_like(p)).reshape(-1).detach()
            for g, p in zip(grads, params.tensors())
        ])
        if not bool(torch.isfinite(flat).all()) or not math.isfinite(loss):
            raise TrainingInstabilityError(
                'non-finite JFB gradient',
                record={
                    'loss': loss,
                    'nonfinite_entries': int((~torch.isfinite(flat)).sum()),
                    'params': params.values(),
                },
            )
        return loss, flat

    # ------------------- Прямой проход и валидация -------------------

    def forward(
        self, pair: TrainingPair, reg: GradStepRegularizer, config: SolverConfig
    ) -> torch.Tensor:
        x_hat, _ = self.solver.solve(pair.y, pair.fidelity, reg, config)
        return x_hat

    def validate(
        self, pairs: Sequence[TrainingPair], reg: GradStepRegularizer, config: SolverConfig
    ) -> Tuple[float, float, int]:
        """(mean PSNR, mean SSIM, число расходимостей) на валидации с бюджетом обучения"""
        psnrs, ssims, diverged = [], [], 0
        for pair in pairs:
            try:
                x_hat = self.forward(pair, reg, config)
            except DivergenceError:
                diverged += 1
                continue
            psnrs.append(psnr(x_hat.clamp(0, 1), pair.x_star))
            ssims.append(safe_ssim(x_hat.clamp(0, 1), pair.x_star))
        if not psnrs:
            return -math.inf, -math.inf, diverged
        return sum(psnrs) / len(psnrs), sum(ssims) / len(ssims), diverged

    @staticmethod
    def _solver_config(base: SolverConfig, values: Dict[str, float]) -> SolverConfig:
        return base.model_copy(update={
            'lam': values['lam'],
            'tau': values['tau'],
            'alpha': values['alpha'] if base.scheme.is_inertial else base.alpha,
            'tol': 0.0,
            'track_objective': False,
        })

    # ------------------- Цикл обучения -------------------

    def train_loop(
        self,
        train_set: Sequence[TrainingPair],
        val_set: Sequence[TrainingPair],
        reg: GradStepRegularizer,
        solver_config: SolverConfig,
        train_config: TrainConfig,
    ) -> TrainingResult:
        """
        Эпоха: прямые проходы с фиксированным бюджетом, сумма JFB-градиентов,
        один шаг Adam, валидация. Остановка после `patience` эпох без улучшения PSNR.
        """
        rng = SeededRng(train_config.seed)
        params = LearnableParameters(
            reg, solver_config.lam, solver_config.tau, solver_config.alpha, float(reg.sigma)
        )
        reg.sigma = params.values()['sigma']
        mask = params.group_mask(train_config)
        adam = AdamState.create(params.flat(), train_config.learning_rate)
        scheme = solver_config.scheme
        out_dir = Path(train_config.checkpoint_dir) if train_config.checkpoint_dir else None

        log: List[EpochRecord] = []
        started = time.perf_counter()
        diverged_total = 0

        def snapshot(epoch: int, val_psnr: float) -> Checkpoint:
            values = params.values()
            return Checkpoint.from_regularizer(
                reg, values['lam'], values['tau'], values['alpha'],
                epoch=epoch, val_psnr=val_psnr, rng_state=rng.get_state(),
            )

        # эпоха 0: начальные параметры без обновления
        config = self._solver_config(solver_config, params.values())
        val_psnr, val_ssim, _ = self.validate(val_set, reg, config)
        loss0, _, div0 = self._epoch_gradient(train_set, params, config, scheme, compute_grad=False)
        diverged_total += div0
        log.append(EpochRecord(
            epoch=0, train_loss=loss0, val_psnr=val_psnr, val_ssim=val_ssim,
            diverged_count=div0, wall_time_s=time.perf_counter() - started,
        ))
        best = snapshot(0, val_psnr)
        best_epoch = 0
        logger.info(f'Epoch 0: val PSNR {val_psnr:.3f} dB, SSIM {val_ssim:.4f}')

        epochs = range(1, train_config.max_epochs + 1)
        for epoch in tqdm(epochs, desc='train', disable=not settings.PROGRESS):
            config = self._solver_config(solver_config, params.values())
            loss, grad, diverged = self._epoch_gradient(
                train_set, params, config, scheme, num_workers=train_config.num_workers
            )
            diverged_total += diverged
            if grad is not None:
                _, new_flat = adam_update(adam, params.flat(), grad * mask, train_config.learning_rate)
                params.set_flat(new_flat)

            config = self._solver_config(solver_config, params.values())
            val_psnr, val_ssim, _ = self.validate(val_set, reg, config)
            log.append(EpochRecord(
                epoch=epoch, train_loss=loss, val_psnr=val_psnr, val_ssim=val_ssim,
                diverged_count=diverged, wall_time_s=time.perf_counter() - started,
            ))
            logger.info(
                f'Epoch {epoch}: loss {loss:.6e}, val PSNR {val_psnr:.3f} dB, '
                f'SSIM {val_ssim:.4f}, diverged {diverged}'
            )
            if val_psnr > best.val_psnr:
                best = snapshot(epoch, val_psnr)
                best_epoch = epoch
                if out_dir is not None:
                    save_checkpoint(out_dir / 'best.ckpt', best)
            if epoch - best_epoch >= train_config.patience:
                logger.info(f'Early stop at epoch {epoch} (best epoch {best_epoch})')
                break

        if out_dir is not None and best_epoch == 0:
            save_checkpoint(out_dir / 'best.ckpt', best)
        return TrainingResult(best=best, log=log, diverged_total=diverged_total)

    def _epoch_gradient(
        self,
        pairs: Sequence[TrainingPair],
        params: LearnableParameters,
        config: SolverConfig,
        scheme: Scheme,
        compute_grad: bool = True,
        num_workers: int = 1,
    ) -> Tuple[float, Optional[torch.Tensor], int]:
        """Средняя потеря, сумма градиентов (фиксированный порядок) и число пропусков"""
        reg = params.reg
        if scheme.is_unrolled and compute_grad:
            # градиент считается через все развёрнутые шаги от начальной точки
            forwards = [pair.fidelity.adjoint_init(pair.y) for pair in pairs]
        else:
            def run(pair):
                try:
                    return self.forward(pair, reg, config)
                except DivergenceError:
                    return None

            if num_workers > 1:
                with ThreadPoolExecutor(max_workers=num_workers) as pool:
                    forwards = list(pool.map(run, pairs))
            else:
                forwards = [run(pair) for pair in pairs]

        acc = KahanAccumulator(params.flat().numel())
        losses, diverged = [], 0
        for index, (pair, x_hat) in enumerate(zip(pairs, forwards)):
            if x_hat is None:
                diverged += 1
                logger.warning(f'Instance {index} diverged in the forward pass; skipped')
                continue
            if not compute_grad:
                losses.append(float(mse_loss(x_hat, pair.x_star)))
                continue
            try:
                if scheme.is_unrolled:
                    loss, grad = self.unrolled_gradient(
                        scheme, x_hat, pair.x_star, pair.y, pair.fidelity, params,
                        config.unrolled_steps,
                    )
                else:
                    loss, grad = self.jfb_gradient(
                        scheme, x_hat, pair.x_star, pair.y, pair.fidelity, params
                    )
            except TrainingInstabilityError as e:
                diverged += 1
                logger.warning(f'Instance {index} skipped: {e} {e.record}')
                continue
            losses.append(loss)
            acc.add(grad)
        mean_loss = sum(losses) / len(losses) if losses else math.nan
        grad = acc.total if compute_grad and losses else None
        return mean_loss, grad, diverged


def write_training_log(path, records: Sequence[EpochRecord]) -> None:
    with open(path, 'w', newline='') as fh:
        writer = csv.DictWriter(fh, fieldnames=list(TRAINING_LOG_HEADER))
        writer.writeheader()
        for record in records:
            writer.writerow(record.csv_row())
    logger.info(f'Training log written: {path} ({len(records)} epochs)')
