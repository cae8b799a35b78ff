import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import torch

from ..errors import DivergenceError, UnsupportedProxError
from ..models.base import DataFidelity, Regularizer
from ..models.regularizer import GradStepRegularizer
from ..numerics.grid import check_same_shape
from ..schemas.solver import BudgetMode, RestartMode, Scheme, SolverConfig
from ..schemas.trajectory import IterationRecord, Trajectory

logger = logging.getLogger(__name__)


@dataclass
class IterateState:
    """Состояние инерциальной итерации с момента последнего рестарта"""

    x_prev: torch.Tensor
    x_curr: torch.Tensor
    k: int = 0
    increment_sq_sum: float = 0.0
    z_history: List[torch.Tensor] = field(default_factory=list)
    increments: List[float] = field(default_factory=list)

    @classmethod
    def start(cls, x0: torch.Tensor) -> 'IterateState':
        return cls(x_prev=x0, x_curr=x0)

    def advance(self, z: torch.Tensor, x_next: torch.Tensor, increment: float) -> None:
        self.z_history.append(z)
        self.increments.append(increment)
        self.x_prev, self.x_curr = self.x_curr, x_next
        self.k += 1
        self.increment_sq_sum += increment**2

    def restart(self, mode: RestartMode) -> None:
        self.x_prev = self.x_curr
        self.increment_sq_sum = 0.0
        if mode == RestartMode.FULL:
            self.k = 0
            self.z_history = []
            self.increments = []


class SolverService:
    """Итерации неподвижной точки: RED / RED-P, инерция с рестартом, бэктрекинг, развёртки"""

    # Armijo для базовой линии DEQ
    BACKTRACK_GROWTH = 2.0
    BACKTRACK_SHRINK = 0.5
    ARMIJO_C = 1e-4
    TAU_FLOOR = 1e-8
    # t0 ||grad F||^2 ниже этого (относительно 1 + |F|): убывание F не различимо в float64
    ROUNDOFF_DECREASE = 1e-12
    # ||grad F|| ниже этого (относительно 1 + |F|) считается стационарностью
    STATIONARY_TOL = 1e-13

    # ------------------- Элементарные шаги -------------------

    @staticmethod
    def momentum_extrapolate(x_curr: torch.Tensor, x_prev: torch.Tensor, alpha) -> torch.Tensor:
        """z = x + (1 - alpha)(x - x_prev)"""
        check_same_shape(x_curr, x_prev, 'current and previous iterates')
        return x_curr + (1 - alpha) * (x_curr - x_prev)

    @staticmethod
    def red_step(
        z: torch.Tensor,
        y: torch.Tensor,
        fidelity: DataFidelity,
        reg: Regularizer,
        lam,
        tau,
        create_graph: bool = False,
    ) -> torch.Tensor:
        """z - tau (grad f(z) + lam grad g(z))"""
        return z - tau * (fidelity.grad(z, y) + lam * reg.g_grad(z, create_graph=create_graph))

    @staticmethod
    def redp_step(
        z: torch.Tensor,
        y: torch.Tensor,
        fidelity: DataFidelity,
        reg: Regularizer,
        lam,
        tau,
        create_graph: bool = False,
    ) -> torch.Tensor:
        """prox_{tau f}(z - tau lam grad g(z))"""
        if not fidelity.has_closed_prox:
            raise UnsupportedProxError(f'{fidelity.name} fidelity has no closed-form prox')
        half = z - tau * lam * reg.g_grad(z, create_graph=create_graph)
        return fidelity.prox(half, y, tau)

    @staticmethod
    def restart_check(state: IterateState, budget: float) -> bool:
        """k * sum ||x^{t+1} - x^t||^2 > B^2"""
        if math.isinf(budget):
            return False
        return state.k * state.increment_sq_sum > budget**2

    @staticmethod
    def averaging_select(
        z_history: List[torch.Tensor],
        increments: List[float],
        max_iter: int,
        x_last: torch.Tensor,
    ) -> Tuple[Optional[int], torch.Tensor]:
        """
        K0 = argmin_{floor(K/2) < k < K-1} ||x^{k+1} - x^k||, x_hat = mean(z^0..z^K0).

        Ties go to the smallest k. An empty window returns (None, x_last).
        """
        upper = min(max_iter - 1, len(increments), len(z_history))
        window = range(max_iter // 2 + 1, upper)
        if len(window) == 0:
            logger.warning(
                f'Averaging window empty for K={max_iter} ({len(increments)} steps since restart); '
                'returning last iterate'
            )
            return None, x_last
        k0 = min(window, key=lambda k: (increments[k], k))
        x_hat = torch.stack(z_history[: k0 + 1]).mean(dim=0)
        return k0, x_hat

    @staticmethod
    def objective_and_gradnorm(
        x: torch.Tensor, y: torch.Tensor, fidelity: DataFidelity, reg: Regularizer, lam
    ) -> Tuple[float, float]:
        """(F(x), ||grad F(x)||) для F = f + lam g"""
        g_val, g_grad = reg.g_value_and_grad(x)
        value = fidelity.value(x, y) + lam * g_val
        grad = fidelity.grad(x, y) + lam * g_grad
        return float(value), float(torch.linalg.vector_norm(grad))

    @staticmethod
    def unrolled_step(
        kind: Scheme,
        x: torch.Tensor,
        y: torch.Tensor,
        fidelity: DataFidelity,
        reg: GradStepRegularizer,
        tau,
    ) -> torch.Tensor:
        """MoDL: N(prox_{tau f}(x)); VarNet: x - tau grad f(x) - N(x)"""
        if kind == Scheme.MODL:
            if not fidelity.has_closed_prox:
                raise UnsupportedProxError(f'MoDL needs a closed-form prox; {fidelity.name} has none')
            return reg.net(fidelity.prox(x, y, tau), reg.sigma)
        if kind == Scheme.VARNET:
            return x - tau * fidelity.grad(x, y) - reg.net(x, reg.sigma)
        raise ValueError(f'{kind} is not an unrolled scheme')

    # ------------------- Решатели -------------------

    def solve(
        self,
        y: torch.Tensor,
        fidelity: DataFidelity,
        reg: Regularizer,
        config: SolverConfig,
        x0: Optional[torch.Tensor] = None,
    ) -> Tuple[torch.Tensor, Trajectory]:
        """Диспетчер по config.scheme"""
        if x0 is None:
            x0 = fidelity.adjoint_init(y)
        if config.scheme == Scheme.DEQ_BACKTRACKING:
            return self.deq_baseline_solve(y, fidelity, reg, config, x0)
        if config.scheme.is_unrolled:
            return self.unrolled_solve(y, fidelity, reg, config, x0)
        return self.ideq_solve(y, fidelity, reg, config, x0)

    def ideq_solve(
        self,
        y: torch.Tensor,
        fidelity: DataFidelity,
        reg: Regularizer,
        config: SolverConfig,
        x0: torch.Tensor,
    ) -> Tuple[torch.Tensor, Trajectory]:
        """
        Инерциальная итерация (градиентная или проксимальная).

        Схемы red / red-prox идут через тот же цикл с alpha = 1 и B = inf.
        """
        scheme = config.scheme
        if scheme not in (Scheme.IDEQ_GRAD, Scheme.IDEQ_PROX, Scheme.RED, Scheme.RED_PROX):
            raise ValueError(f'ideq_solve does not run scheme {scheme.value}')
        if not bool(torch.isfinite(x0).all()):
            raise ValueError('initial iterate must be finite')
        step = self.redp_step if scheme.uses_prox else self.red_step
        if scheme.uses_prox and not fidelity.has_closed_prox:
            raise UnsupportedProxError(f'{scheme.value} needs a closed-form prox; {fidelity.name} has none')
        alpha = config.alpha if scheme.is_inertial else 1.0
        budget = config.restart_budget if scheme.is_inertial else math.inf
        restart_mode = config.effective_restart_mode()
        lam, tau, K = config.lam, config.tau, config.max_iter

        trajectory = Trajectory(scheme=scheme.value)
        state = IterateState.start(x0)
        started = time.perf_counter()
        n = 0
        logger.info(
            f'Solve {scheme.value}: lam={lam} tau={tau} alpha={alpha} B={budget} K={K} '
            f'restart={restart_mode.value} budget={config.budget_mode.value}'
        )
        while self._within_budget(config, state, n):
            z = self.momentum_extrapolate(state.x_curr, state.x_prev, alpha)
            x_next = step(z, y, fidelity, reg, lam, tau)
            if not bool(torch.isfinite(x_next).all()):
                trajectory.stop_reason = 'diverged'
                logger.warning(f'{scheme.value} diverged at iteration {n}')
                raise DivergenceError(f'non-finite iterate at iteration {n}', trajectory=trajectory)

            increment = float(torch.linalg.vector_norm(x_next - state.x_curr))
            rel = self._relative(increment, state.x_curr)
            state.advance(z, x_next, increment)
            restarted = self.restart_check(state, budget)

            record = IterationRecord(
                iter=n, k_local=state.k, residual=increment, rel_residual=rel,
                step_size=float(tau), restart=restarted,
                time_s=time.perf_counter() - started,
            )
            if config.track_objective:
                record.objective, record.grad_norm = self.objective_and_gradnorm(
                    x_next, y, fidelity, reg, lam
                )
                _, record.grad_norm_z = self.objective_and_gradnorm(z, y, fidelity, reg, lam)
            trajectory.append(record)
            n += 1

            if restarted:
                logger.debug(f'Restart at iteration {n - 1} (k={state.k})')
                state.restart(restart_mode)
            if rel < config.tol:
                if trajectory.converged_at is None:
                    trajectory.converged_at = n - 1
                trajectory.stop_reason = 'tolerance'
                break

        if not trajectory.stop_reason:
            trajectory.stop_reason = 'budget'
        x_hat = state.x_curr
        if config.averaging:
            k0, x_hat = self.averaging_select(state.z_history, state.increments, K, state.x_curr)
            trajectory.averaged_k0 = k0
        logger.info(
            f'{scheme.value} finished: {trajectory.iterations} iterations, '
            f'{trajectory.restarts} restarts, stop={trajectory.stop_reason}, '
            f'last residual={trajectory.records[-1].residual if trajectory.records else 0.0:.3e}'
        )
        return x_hat, trajectory

    def deq_baseline_solve(
        self,
        y: torch.Tensor,
        fidelity: DataFidelity,
        reg: Regularizer,
        config: SolverConfig,
        x0: torch.Tensor,
    ) -> Tuple[torch.Tensor, Trajectory]:
        """RED с шагом по Armijo: tau удваивается от последнего принятого, делится пополам до выполнения условия"""
        lam = config.lam
        trajectory = Trajectory(scheme=Scheme.DEQ_BACKTRACKING.value)
        started = time.perf_counter()
        x = x0
        F, grad = self._objective_with_grad(x, y, fidelity, reg, lam)
        tau = config.tau
        n = 0
        logger.info(f'Solve deq-backtracking: lam={lam} tau0={tau} K={config.max_iter}')
        while n < config.max_iter + 1:
            grad_sq = float((grad**2).sum())
            if math.sqrt(grad_sq) <= self.STATIONARY_TOL * (1.0 + abs(F)):
                trajectory.stop_reason = 'stationary'
                break
            t = tau if n == 0 else min(tau * self.BACKTRACK_GROWTH, config.tau * 2**10)
            t0 = t
            while True:
                x_try = x - t * grad
                if bool(torch.isfinite(x_try).all()):
                    F_try, grad_try = self._objective_with_grad(x_try, y, fidelity, reg, lam)
                    if math.isfinite(F_try) and F_try <= F - self.ARMIJO_C * t * grad_sq:
                        break
                t *= self.BACKTRACK_SHRINK
                if t < self.TAU_FLOOR:
                    if t0 * grad_sq <= self.ROUNDOFF_DECREASE * (1.0 + abs(F)):
                        break
                    trajectory.stop_reason = 'diverged'
                    logger.warning(f'Backtracking hit the step floor at iteration {n}')
                    raise DivergenceError(
                        f'backtracking step fell below {self.TAU_FLOOR} at iteration {n}',
                        trajectory=trajectory,
                    )
            if t < self.TAU_FLOOR:
                logger.debug(f'Armijo decrease below float64 resolution at iteration {n}')
                trajectory.stop_reason = 'stationary'
                break
            increment = float(torch.linalg.vector_norm(x_try - x))
            rel = self._relative(increment, x)
            trajectory.append(IterationRecord(
                iter=n, k_local=n + 1, residual=increment, rel_residual=rel,
                objective=F_try, grad_norm=float(torch.linalg.vector_norm(grad_try)),
                grad_norm_z=math.sqrt(grad_sq), step_size=t,
                time_s=time.perf_counter() - started,
            ))
            x, F, grad, tau = x_try, F_try, grad_try, t
            n += 1
            if rel < config.tol:
                trajectory.converged_at = n - 1
                trajectory.stop_reason = 'tolerance'
                break
        if not trajectory.stop_reason:
            trajectory.stop_reason = 'budget'
        logger.info(
            f'deq-backtracking finished: {trajectory.iterations} iterations, stop={trajectory.stop_reason}'
        )
        return x, trajectory

    def unrolled_solve(
        self,
        y: torch.Tensor,
        fidelity: DataFidelity,
        reg: Regularizer,
        config: SolverConfig,
        x0: torch.Tensor,
    ) -> Tuple[torch.Tensor, Trajectory]:
        """Ровно config.unrolled_steps шагов MoDL / VarNet"""
        if not isinstance(reg, GradStepRegularizer):
            raise ValueError('unrolled schemes need a network regularizer')
        trajectory = Trajectory(scheme=config.scheme.value)
        started = time.perf_counter()
        x = x0
        for n in range(config.unrolled_steps):
            x_next = self.unrolled_step(config.scheme, x, y, fidelity, reg, config.tau)
            if not bool(torch.isfinite(x_next).all()):
                trajectory.stop_reason = 'diverged'
                raise DivergenceError(f'non-finite iterate at unrolled step {n}', trajectory=trajectory)
            increment = float(torch.linalg.vector_norm(x_next - x))
            record = IterationRecord(
                iter=n, k_local=n + 1, residual=increment,
                rel_residual=self._relative(increment, x), step_size=config.tau,
                time_s=time.perf_counter() - started,
            )
            if config.track_objective:
                record.objective, record.grad_norm = self.objective_and_gradnorm(
                    x_next, y, fidelity, reg, config.lam
                )
            trajectory.append(record)
            x = x_next
        trajectory.stop_reason = 'budget'
        return x, trajectory

    # ------------------- Вспомогательное -------------------

    @staticmethod
    def _within_budget(config: SolverConfig, state: IterateState, n: int) -> bool:
        if config.budget_mode == BudgetMode.TOTAL:
            return n < config.max_iter + 1
        return state.k <= config.max_iter and n < config.max_total_iter

    @staticmethod
    def _relative(increment: float, x: torch.Tensor) -> float:
        norm = float(torch.linalg.vector_norm(x))
        if norm > 0:
            return increment / norm
        return 0.0 if increment == 0 else math.inf

    @staticmethod
    def _objective_with_grad(x, y, fidelity, reg, lam) -> Tuple[float, torch.Tensor]:
        g_val, g_grad = reg.g_value_and_grad(x)
        value = float(fidelity.value(x, y) + lam * g_val)
        return value, fidelity.grad(x, y) + lam * g_grad
