from .experiment import ExperimentConfig
from .solver import BudgetMode, RestartMode, Scheme, SolverConfig
from .training import TRAINING_LOG_HEADER, EpochRecord, TrainConfig
from .trajectory import TRAJECTORY_CSV_HEADER, IterationRecord, RateFit, Trajectory

__all__ = [
    'BudgetMode',
    'EpochRecord',
    'ExperimentConfig',
    'IterationRecord',
    'RateFit',
    'RestartMode',
    'Scheme',
    'SolverConfig',
    'TRAINING_LOG_HEADER',
    'TRAJECTORY_CSV_HEADER',
    'TrainConfig',
    'Trajectory',
]
