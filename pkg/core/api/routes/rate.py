# core/api/routes/rate.py - rate-fit
import csv

from ...numerics.io import ensure_run_dir
from ..deps import get_experiment_service, load_config

RATE_CSV_HEADER = ('slope', 'intercept', 'r_squared', 'window_start', 'window_end', 'points')


def add_parser(subparsers, common) -> None:
    parser = subparsers.add_parser('rate-fit', parents=[common], help='наклон log-log по CSV траектории')
    parser.add_argument('--trajectory', required=True, help='CSV траектории')
    # Без флагов окно берётся из rate_window_start / rate_window_end конфига
    parser.add_argument('--window-start', type=int, default=None)
    parser.add_argument('--window-end', type=int, default=None)
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    config = load_config(args)
    start = config.rate_window_start if args.window_start is None else args.window_start
    end = config.rate_window_end if args.window_end is None else args.window_end
    fit = get_experiment_service().rate_fit(args.trajectory, (start, end))
    print(
        f'slope={fit.slope:.6f} intercept={fit.intercept:.6f} r2={fit.r_squared:.6f} '
        f'window={fit.window[0]}-{fit.window[1]}'
    )
    if args.out:
        root = ensure_run_dir(args.out)
        with open(root / 'rate_fit.csv', 'w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(RATE_CSV_HEADER)
            writer.writerow([
                repr(fit.slope), repr(fit.intercept), repr(fit.r_squared),
                fit.window[0], fit.window[1], fit.points,
            ])
    return 0
