import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from scipy.stats import linregress
from tqdm import tqdm

from ..config import settings
from ..errors import ConfigError, DivergenceError, DomainError
from ..models.base import DataFidelity, Regularizer
from ..models.checkpoint import load_checkpoint, save_checkpoint
from ..models.fidelity import InpaintingModel, MaskedFourierModel, RicianModel
from ..models.masks import generate_mask
from ..models.regularizer import (
    AnalyticRegularizer,
    GradStepRegularizer,
    SmoothPotentialNet,
    estimate_lipschitz,
)
from ..numerics.grid import SeededRng
from ..numerics.io import ensure_run_dir, write_blob, write_pgm
from ..numerics.metrics import psnr, safe_ssim
from ..schemas.experiment import ExperimentConfig
from ..schemas.solver import Scheme, SolverConfig
from ..schemas.trajectory import RateFit, Trajectory
from .DatasetService import DatasetService
from .SolverService import SolverService
from .TrainingService import TrainingPair, TrainingService, write_training_log

logger = logging.getLogger(__name__)

BENCH_CSV_HEADER = (
    'scheme',
    'instance',
    'psnr',
    'ssim',
    'iterations',
    'iters_to_tol',
    'restarts',
    'wall_time_s',
    'diverged',
)


@dataclass
class SolveSummary:
    instance: int
    psnr: float
    ssim: float
    iterations: int
    restarts: int
    wall_time_s: float

    def line(self) -> str:
        return (
            f'instance={self.instance} psnr={self.psnr:.4f} ssim={self.ssim:.4f} '
            f'iterations={self.iterations} restarts={self.restarts} wall_time_s={self.wall_time_s:.4f}'
        )


@dataclass
class ReferenceProblem:
    """Эталонная невыпуклая задача: Rician + GradStep"""

    y: torch.Tensor
    x_true: torch.Tensor
    fidelity: RicianModel
    reg: GradStepRegularizer
    config: SolverConfig


class ExperimentService:
    """Сборка задач из конфига и команды solve / train / bench / rate-fit"""

    MIN_RATE_POINTS = 50
    # running min ||grad F|| ниже этой доли первой нормы: шум округления float64, в МНК не идёт
    RATE_FLOOR = 1e-10
    REFERENCE_NOISE = 0.1
    REFERENCE_LAM = 0.5
    REFERENCE_ALPHA = 0.4

    def __init__(self):
        self.solver = SolverService()
        self.trainer = TrainingService(self.solver)
        self.datasets = DatasetService()

    # ------------------- Сборка задачи -------------------

    def build_fidelity(self, config: ExperimentConfig, shape, rng: SeededRng) -> DataFidelity:
        if config.problem == 'mri':
            mask = generate_mask('cartesian-lines', shape, rng, acceleration=config.acceleration)
            return MaskedFourierModel(mask, config.noise_level)
        if config.problem == 'inpainting':
            mask = generate_mask('random-pixel', shape, rng, keep_prob=config.keep_prob)
            return InpaintingModel(mask, config.noise_level)
        return RicianModel(config.noise_level)

    def build_regularizer(self, config: ExperimentConfig) -> Tuple[Regularizer, ExperimentConfig]:
        """Регуляризатор и конфиг; lam / tau / alpha из чекпоинта имеют приоритет"""
        if config.checkpoint:
            ckpt = load_checkpoint(config.checkpoint)
            config = config.with_overrides(
                lam=ckpt.lam, tau=ckpt.tau, alpha=min(ckpt.alpha, 1.0), sigma=ckpt.sigma
            )
            return ckpt.build_regularizer(), config
        if config.regularizer == 'tikhonov':
            return AnalyticRegularizer.tikhonov(config.mu), config
        if config.regularizer == 'smoothed-tv':
            return AnalyticRegularizer.smoothed_tv(config.delta), config
        net = SmoothPotentialNet(
            config.channels(), noise_channel=config.noise_channel,
            padding=config.padding, seed=config.net_seed,
        )
        return GradStepRegularizer(net, sigma=config.sigma or 0.0), config

    def load_images(self, config: ExperimentConfig, count: int, seed_offset: int = 0) -> List[torch.Tensor]:
        if config.dataset:
            images = self.datasets.load_images(config.dataset)
            return images[seed_offset : seed_offset + count]
        return self.datasets.generate(
            config.generator, count, config.image_size, config.seed + seed_offset
        )

    def make_instances(
        self, config: ExperimentConfig, images: Sequence[torch.Tensor], stream: int = 0
    ) -> List[TrainingPair]:
        """Маска и шум для каждого изображения из отдельного потока RNG"""
        base = SeededRng(config.seed).spawn(stream)
        pairs = []
        for i, x_true in enumerate(images):
            rng = base.spawn(i)
            fidelity = self.build_fidelity(config, tuple(x_true.shape), rng)
            pairs.append(TrainingPair(y=fidelity.simulate(x_true, rng), x_star=x_true, fidelity=fidelity))
        return pairs

    # ------------------- solve -------------------

    def cmd_solve(self, config: ExperimentConfig, out_dir) -> List[SolveSummary]:
        """Восстановление, траектория CSV и строка метрик на каждый экземпляр"""
        reg, config = self.build_regularizer(config)
        solver_config = config.solver_config()
        pairs = self.make_instances(config, self.load_images(config, max(1, config.image_count)))
        root = ensure_run_dir(out_dir)
        summaries = []
        for i, pair in enumerate(pairs):
            try:
                x_hat, trajectory = self.solver.solve(pair.y, pair.fidelity, reg, solver_config)
            except DivergenceError as e:
                if e.trajectory is not None:
                    e.trajectory.to_csv(root / f'trajectory_{i:04d}.csv')
                logger.error(f'Instance {i} diverged: {e}')
                raise
            self._write_instance(root, i, pair, x_hat, trajectory)
            summary = SolveSummary(
                instance=i,
                psnr=psnr(x_hat, pair.x_star),
                ssim=safe_ssim(x_hat, pair.x_star),
                iterations=trajectory.iterations,
                restarts=trajectory.restarts,
                wall_time_s=trajectory.wall_time,
            )
            logger.info(summary.line())
            summaries.append(summary)
        (root / 'config.env').write_text(config.serialize())
        return summaries

    @staticmethod
    def _write_instance(root: Path, i: int, pair: TrainingPair, x_hat, trajectory: Trajectory) -> None:
        write_pgm(root / f'recon_{i:04d}.pgm', x_hat)
        write_blob(root / f'recon_{i:04d}.blob', x_hat)
        write_blob(root / f'measurement_{i:04d}.blob', pair.y)
        mask = getattr(pair.fidelity, 'mask', None)
        if mask is not None:
            write_pgm(root / f'mask_{i:04d}.pgm', mask)
        trajectory.to_csv(root / f'trajectory_{i:04d}.csv')

    # ------------------- train -------------------

    def cmd_train(self, config: ExperimentConfig, out_dir):
        reg, config = self.build_regularizer(config)
        if not isinstance(reg, GradStepRegularizer):
            raise ConfigError('training needs the gradstep regularizer')
        root = ensure_run_dir(out_dir)
        train_set = self.make_instances(config, self.load_images(config, config.image_count), stream=0)
        val_set = self.make_instances(
            config, self.load_images(config, config.val_count, seed_offset=config.image_count), stream=1
        )
        train_config = config.train_config().model_copy(
            update={'checkpoint_dir': str(root), 'num_workers': settings.NUM_WORKERS}
        )
        result = self.trainer.train_loop(train_set, val_set, reg, config.solver_config(), train_config)
        save_checkpoint(root / 'best.ckpt', result.best)
        write_training_log(root / 'training_log.csv', result.log)
        (root / 'config.env').write_text(config.serialize())
        logger.info(
            f'Training finished: best epoch {result.best.epoch}, '
            f'val PSNR {result.best.val_psnr:.3f} dB, diverged instances {result.diverged_total}'
        )
        return result

    # ------------------- bench -------------------

    def cmd_bench(self, config: ExperimentConfig, out_dir) -> List[Dict[str, object]]:
        """Таблица сравнения схем: строки по экземплярам и средние по схеме"""
        schemes = config.bench_scheme_list()
        if len(schemes) < 2:
            raise ConfigError('bench needs at least two schemes in bench_schemes')
        reg, config = self.build_regularizer(config)
        pairs = self.make_instances(config, self.load_images(config, max(1, config.image_count)))
        jobs = [(s_idx, scheme, i) for s_idx, scheme in enumerate(schemes) for i in range(len(pairs))]

        def run(job):
            _, scheme, i = job
            pair = pairs[i]
            try:
                x_hat, trajectory = self.solver.solve(
                    pair.y, pair.fidelity, reg, config.solver_config(scheme)
                )
            except DivergenceError:
                return {'diverged': 1}
            return {
                'psnr': psnr(x_hat, pair.x_star),
                'ssim': safe_ssim(x_hat, pair.x_star),
                'iterations': trajectory.iterations,
                'iters_to_tol': (
                    trajectory.converged_at + 1 if trajectory.converged_at is not None else math.nan
                ),
                'restarts': trajectory.restarts,
                'wall_time_s': trajectory.wall_time,
                'diverged': 0,
            }

        with ThreadPoolExecutor(max_workers=max(1, settings.NUM_WORKERS)) as pool:
            results = list(tqdm(pool.map(run, jobs), total=len(jobs), desc='bench', disable=not settings.PROGRESS))

        rows: List[Dict[str, object]] = []
        for s_idx, scheme in enumerate(schemes):
            mine = [(job[2], res) for job, res in zip(jobs, results) if job[0] == s_idx]
            for i, res in mine:
                rows.append(self._bench_row(scheme, str(i), res))
            ok = [res for _, res in mine if not res['diverged']]
            if not ok:
                logger.warning(f'Scheme {scheme.value} diverged on every instance')
            summary = {
                key: (float(np.mean([r[key] for r in ok])) if ok else math.nan)
                for key in ('psnr', 'ssim', 'iterations', 'iters_to_tol', 'restarts', 'wall_time_s')
            }
            summary['diverged'] = len(mine) - len(ok)
            rows.append(self._bench_row(scheme, 'mean', summary))

        root = ensure_run_dir(out_dir)
        with open(root / 'bench.csv', 'w', newline='') as fh:
            writer = csv.DictWriter(fh, fieldnames=list(BENCH_CSV_HEADER))
            writer.writeheader()
            writer.writerows(rows)
        logger.info(f'Bench table written: {root / "bench.csv"} ({len(rows)} rows)')
        return rows

    @staticmethod
    def _bench_row(scheme: Scheme, instance: str, res: Dict[str, object]) -> Dict[str, object]:
        row = {key: res.get(key, math.nan) for key in BENCH_CSV_HEADER[2:]}
        row.update({'scheme': scheme.value, 'instance': instance})
        return row

    # ------------------- rate-fit -------------------

    def rate_fit(
        self,
        source: Union[Trajectory, str, Path, Sequence[float]],
        window: Tuple[int, Optional[int]] = (1, None),
    ) -> RateFit:
        """
        МНК по (log n, log min_{k<=n} ||grad F||), n = 1, 2, ...: номер итерации.

        Окно [start, end] включительно; нулевые и неконечные нормы обрезают окно,
        как и выход running min на уровень RATE_FLOOR * ||grad F^1||.
        """
        if isinstance(source, (str, Path)):
            path = Path(source)
            if not path.is_file():
                raise ConfigError(f'trajectory file not found: {path}')
            try:
                source = Trajectory.from_csv(path)
            except ValueError as e:
                raise ConfigError(str(e)) from e
        norms = source.column('grad_norm') if isinstance(source, Trajectory) else [float(g) for g in source]
        start, end = window
        end = len(norms) if end is None else min(end, len(norms))
        if start < 1 or end - start + 1 < self.MIN_RATE_POINTS:
            raise DomainError(
                f'rate fit needs at least {self.MIN_RATE_POINTS} iterations in the window, '
                f'got [{start}, {end}] of {len(norms)}'
            )
        running = np.minimum.accumulate(np.asarray(norms, dtype=np.float64))
        n = np.arange(1, len(norms) + 1, dtype=np.float64)
        sel = slice(start - 1, end)
        values, counts = running[sel], n[sel]
        bad = np.flatnonzero(~(np.isfinite(values) & (values > 0)))
        if bad.size:
            cut = int(bad[0])
            logger.warning(f'Nonpositive gradient norm at n={int(counts[cut])}; window truncated')
            values, counts = values[:cut], counts[:cut]
        first = float(running[0])
        if math.isfinite(first) and first > 0:
            stalled = np.flatnonzero(values <= self.RATE_FLOOR * first)
            if stalled.size:
                cut = int(stalled[0])
                logger.info(f'Gradient norm at round-off level from n={int(counts[cut])}; window truncated')
                values, counts = values[:cut], counts[:cut]
        if values.size < 2:
            raise DomainError('rate fit window is empty after truncation')
        fit = linregress(np.log(counts), np.log(values))
        return RateFit(
            slope=float(fit.slope),
            intercept=float(fit.intercept),
            r_squared=float(fit.rvalue**2),
            window=(int(counts[0]), int(counts[-1])),
            points=int(values.size),
        )

    # ------------------- Эталонная невыпуклая задача -------------------

    def build_reference_problem(
        self, seed: int, size: int = 16, scheme: Scheme = Scheme.IDEQ_GRAD, max_iter: int = 2000
    ) -> ReferenceProblem:
        """
        Rician sigma_y = 0.1 на тёмном фантоме и GradStep со случайными весами.

        На тёмных пикселях кривизна f близка к нулю, на светлых около 1/sigma_y^2,
        поэтому задача плохо обусловлена. tau = 1 / (L_f + lam * L_g).

        Медленные моды имеют tau * F'' порядка 0.01..0.15; alpha = 0.4 держит
        инерционный шаг сжимающим на всём этом диапазоне.
        """
        rng = SeededRng(seed)
        x_true = self.datasets.shepp_like_phantom(size, rng.spawn(0))
        fidelity = RicianModel(self.REFERENCE_NOISE)
        y = fidelity.simulate(x_true, rng.spawn(1))
        net = SmoothPotentialNet(seed=seed)
        reg = GradStepRegularizer(net, sigma=0.0)
        l_g = estimate_lipschitz(reg.g_grad, x_true.shape, rng.spawn(2), samples=10)
        tau = 1.0 / (fidelity.lipschitz_grad + self.REFERENCE_LAM * l_g)
        config = SolverConfig(
            scheme=scheme,
            lam=self.REFERENCE_LAM,
            tau=tau,
            alpha=self.REFERENCE_ALPHA,
            restart_budget=math.inf,
            max_iter=max_iter,
            tol=1e-4,
        )
        return ReferenceProblem(y=y, x_true=x_true, fidelity=fidelity, reg=reg, config=config)
