# core/api/routes/data.py - gen-data
import logging

from ..deps import get_dataset_service, resolve_out_dir

logger = logging.getLogger(__name__)


def add_parser(subparsers, common) -> None:
    parser = subparsers.add_parser('gen-data', parents=[common], help='синтетический набор PGM')
    parser.add_argument(
        '--kind',
        default='piecewise-constant',
        choices=['piecewise-constant', 'smooth-bump', 'shepp-like-phantom'],
    )
    parser.add_argument('--count', type=int, default=16)
    parser.add_argument('--size', type=int, default=16)
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    out_dir = resolve_out_dir(args, 'data')
    paths = get_dataset_service().gen_data(
        args.kind, args.count, args.size, args.seed if args.seed is not None else 0, out_dir
    )
    print(f'generated={len(paths)} dir={out_dir}')
    return 0
