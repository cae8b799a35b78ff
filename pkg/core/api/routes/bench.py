# core/api/routes/bench.py - bench
from ..deps import get_experiment_service, load_config, resolve_out_dir


def add_parser(subparsers, common) -> None:
    parser = subparsers.add_parser('bench', parents=[common], help='сравнение схем')
    parser.add_argument('--schemes', default=None, help='список схем через запятую')
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    config = load_config(args)
    if args.schemes:
        config = config.with_overrides(bench_schemes=args.schemes)
    out_dir = resolve_out_dir(args, 'bench', config)
    for row in get_experiment_service().cmd_bench(config, out_dir):
        if row['instance'] == 'mean':
            print(
                f"scheme={row['scheme']} psnr={row['psnr']:.4f} ssim={row['ssim']:.4f} "
                f"iterations={row['iterations']:.1f} wall_time_s={row['wall_time_s']:.4f} "
                f"diverged={row['diverged']}"
            )
    return 0
