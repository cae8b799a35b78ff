"""
Per-iteration solver records, their CSV export and the log-log rate fit.
"""

import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

TRAJECTORY_CSV_HEADER = (
    'iter',
    'k_local',
    'residual',
    'rel_residual',
    'objective',
    'grad_norm',
    'restart',
    'time_s',
)


class IterationRecord(BaseModel):
    """Одна итерация: невязка, F, ||grad F|| в x и в z, событие рестарта"""

    iter: int
    k_local: int
    residual: float
    rel_residual: float
    objective: float = math.nan
    grad_norm: float = math.nan
    grad_norm_z: float = math.nan
    step_size: float = math.nan
    restart: bool = False
    time_s: float = 0.0

    def csv_row(self) -> dict:
        row = {key: getattr(self, key) for key in TRAJECTORY_CSV_HEADER}
        row['restart'] = int(self.restart)
        for key in ('residual', 'rel_residual', 'objective', 'grad_norm', 'time_s'):
            row[key] = repr(float(row[key]))
        return row


class Trajectory(BaseModel):
    scheme: str = ''
    records: List[IterationRecord] = Field(default_factory=list)
    stop_reason: str = ''
    converged_at: Optional[int] = None  # первая итерация с rel_residual < eps
    averaged_k0: Optional[int] = None

    def append(self, record: IterationRecord) -> None:
        if self.records and record.iter <= self.records[-1].iter:
            raise ValueError('trajectory index must increase')
        self.records.append(record)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def restarts(self) -> int:
        return sum(1 for r in self.records if r.restart)

    @property
    def wall_time(self) -> float:
        return self.records[-1].time_s if self.records else 0.0

    def column(self, name: str) -> List[float]:
        return [float(getattr(r, name)) for r in self.records]

    def to_csv(self, path) -> None:
        with open(path, 'w', newline='') as fh:
            writer = csv.DictWriter(fh, fieldnames=list(TRAJECTORY_CSV_HEADER))
            writer.writeheader()
            for record in self.records:
                writer.writerow(record.csv_row())
        logger.info(f'Trajectory written: {path} ({self.iterations} rows)')

    @classmethod
    def from_csv(cls, path) -> 'Trajectory':
        with open(path, newline='') as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != TRAJECTORY_CSV_HEADER:
                raise ValueError(f'{path}: unexpected trajectory header {reader.fieldnames}')
            records = [
                IterationRecord(
                    iter=int(row['iter']),
                    k_local=int(row['k_local']),
                    residual=float(row['residual']),
                    rel_residual=float(row['rel_residual']),
                    objective=float(row['objective']),
                    grad_norm=float(row['grad_norm']),
                    restart=row['restart'] == '1',
                    time_s=float(row['time_s']),
                )
                for row in reader
            ]
        return cls(records=records)


class RateFit(BaseModel):
    """МНК-прямая log(min_{k<=n} ||grad F||) = intercept + slope * log n"""

    slope: float
    intercept: float
    r_squared: float
    window: Tuple[int, int]
    points: int
