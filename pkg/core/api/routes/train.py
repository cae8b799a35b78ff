# core/api/routes/train.py - train
from ..deps import get_experiment_service, load_config, resolve_out_dir


def add_parser(subparsers, common) -> None:
    parser = subparsers.add_parser('train', parents=[common], help='обучение JFB')
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    config = load_config(args)
    out_dir = resolve_out_dir(args, 'train', config)
    result = get_experiment_service().cmd_train(config, out_dir)
    print(
        f'best_epoch={result.best.epoch} val_psnr={result.best.val_psnr:.4f} '
        f'epochs={len(result.log) - 1} diverged={result.diverged_total}'
    )
    return 0
