"""
Checkpoint file: one JSON header line followed by the float64 parameter blob.

    IDEQCKPT v1 {"channels": [...], "sigma": ..., "lam": ..., ...}\n<little-endian f8 payload>

The payload is ``SmoothPotentialNet.get_flat()``; floats in the header are
written with ``repr`` precision so the round trip is bit-exact.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import torch

from ..errors import ConfigError
from ..numerics.io import PathLike
from .regularizer import GradStepRegularizer, SmoothPotentialNet

logger = logging.getLogger(__name__)

CKPT_MAGIC = 'IDEQCKPT'
CKPT_VERSION = 'v1'


@dataclass
class Checkpoint:
    channels: List[int]
    noise_channel: bool
    padding: str
    params: torch.Tensor
    sigma: float
    lam: float
    tau: float
    alpha: float
    epoch: int = 0
    val_psnr: Optional[float] = None
    rng_state: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_regularizer(
        cls, reg: GradStepRegularizer, lam: float, tau: float, alpha: float, **extra
    ) -> 'Checkpoint':
        net = reg.net
        return cls(
            channels=list(net.channels),
            noise_channel=net.noise_channel,
            padding=net.padding,
            params=net.get_flat(),
            sigma=float(reg.sigma),
            lam=float(lam),
            tau=float(tau),
            alpha=float(alpha),
            **extra,
        )

    def build_regularizer(self) -> GradStepRegularizer:
        net = SmoothPotentialNet(
            self.channels, noise_channel=self.noise_channel, padding=self.padding, seed=None
        )
        net.set_flat(self.params)
        return GradStepRegularizer(net, sigma=self.sigma)

    def header(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop('params')
        data['num_params'] = int(self.params.numel())
        return data


def save_checkpoint(path: PathLike, ckpt: Checkpoint) -> None:
    header = json.dumps(ckpt.header(), sort_keys=True)
    payload = np.ascontiguousarray(ckpt.params.detach().cpu().numpy(), dtype='<f8')
    with open(path, 'wb') as fh:
        fh.write(f'{CKPT_MAGIC} {CKPT_VERSION} {header}\n'.encode('utf-8'))
        fh.write(payload.tobytes())
    logger.info(f'Checkpoint written: {path} (epoch {ckpt.epoch})')


def load_checkpoint(path: PathLike) -> Checkpoint:
    raw = Path(path).read_bytes()
    nl = raw.find(b'\n')
    if nl < 0:
        raise ConfigError(f'{path}: truncated checkpoint')
    line = raw[:nl].decode('utf-8')
    magic, _, rest = line.partition(' ')
    version, _, header_json = rest.partition(' ')
    if magic != CKPT_MAGIC or version != CKPT_VERSION:
        raise ConfigError(f'{path}: not an {CKPT_MAGIC} {CKPT_VERSION} checkpoint')
    try:
        header = json.loads(header_json)
    except json.JSONDecodeError as e:
        raise ConfigError(f'{path}: bad checkpoint header: {e}') from e
    count = header.pop('num_params')
    params = np.frombuffer(raw, dtype='<f8', offset=nl + 1)
    if params.size != count:
        raise ConfigError(f'{path}: expected {count} parameters, found {params.size}')
    return Checkpoint(params=torch.from_numpy(params.astype(np.float64)), **header)
