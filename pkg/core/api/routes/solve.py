# core/api/routes/solve.py - solve
from ..deps import get_experiment_service, load_config, resolve_out_dir


def add_parser(subparsers, common) -> None:
    parser = subparsers.add_parser('solve', parents=[common], help='восстановление по конфигу')
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    config = load_config(args)
    out_dir = resolve_out_dir(args, 'solve', config)
    for summary in get_experiment_service().cmd_solve(config, out_dir):
        print(summary.line())
    return 0
