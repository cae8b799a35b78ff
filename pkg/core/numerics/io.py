"""
File formats: 8-bit binary PGM (P5) and the raw float64 blob.

Blob layout: one ASCII header line
``IDEQBLOB v1 dtype=<f8 complex=<0|1> shape=<c,h,w>`` followed by the
little-endian float64 payload; complex grids are stored as interleaved re/im.
"""

import logging
import os
from pathlib import Path
from typing import Union

import numpy as np
import torch

from ..errors import ConfigError, ShapeMismatchError

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]
BLOB_MAGIC = 'IDEQBLOB'
BLOB_VERSION = 'v1'


# ------------------- PGM -------------------


def write_pgm(path: PathLike, img: torch.Tensor) -> None:
    """Линейное отображение [0,1] -> [0,255] с отсечением."""
    arr = img.detach().cpu().numpy()
    if arr.ndim == 3:
        if arr.shape[0] != 1:
            raise ShapeMismatchError('PGM stores a single channel')
        arr = arr[0]
    data = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, 'wb') as fh:
        fh.write(f'P5\n{w} {h}\n255\n'.encode('ascii'))
        fh.write(data.tobytes())


def _pgm_tokens(raw: bytes, count: int):
    """Первые `count` полей заголовка PGM (с учётом комментариев) и смещение данных."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b'#':
            while raw[pos : pos + 1] not in (b'\n', b''):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode('ascii'))
    # ровно один пробельный символ перед данными
    return tokens, pos + 1


def read_pgm(path: PathLike) -> torch.Tensor:
    raw = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(raw, 4)
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != 'P5' or maxval != 255:
        raise ConfigError(f'{path}: only 8-bit binary PGM (P5, maxval 255) is supported')
    data = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=offset)
    img = data.reshape(h, w).astype(np.float64) / 255.0
    return torch.from_numpy(img.copy()).unsqueeze(0)


# ------------------- Float64 blob -------------------


def write_blob(path: PathLike, grid: torch.Tensor) -> None:
    t = grid.detach().cpu()
    is_complex = t.is_complex()
    arr = torch.view_as_real(t).numpy() if is_complex else t.numpy()
    shape = ','.join(str(s) for s in t.shape)
    header = f'{BLOB_MAGIC} {BLOB_VERSION} dtype=<f8 complex={int(is_complex)} shape={shape}\n'
    with open(path, 'wb') as fh:
        fh.write(header.encode('ascii'))
        fh.write(np.ascontiguousarray(arr, dtype='<f8').tobytes())


def read_blob(path: PathLike) -> torch.Tensor:
    raw = Path(path).read_bytes()
    nl = raw.index(b'\n')
    fields = raw[:nl].decode('ascii').split()
    if len(fields) < 2 or fields[0] != BLOB_MAGIC:
        raise ConfigError(f'{path}: not a float64 blob')
    meta = dict(f.split('=', 1) for f in fields[2:])
    shape = tuple(int(s) for s in meta['shape'].split(',') if s)
    is_complex = meta.get('complex', '0') == '1'
    arr = np.frombuffer(raw, dtype='<f8', offset=nl + 1).astype(np.float64)
    if is_complex:
        t = torch.view_as_complex(torch.from_numpy(arr.reshape(*shape, 2).copy()))
    else:
        t = torch.from_numpy(arr.reshape(shape).copy())
    return t


def ensure_run_dir(path: PathLike) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
