"""Command line entry point ``vpbench``."""

import argparse
import os
import sys

from .config import load_config
from .errors import ConfigError, VPError
from .experiments import ExperimentConfig, run

# shortcut name -> (experiments, default config overrides)
SHORTCUTS = {
    'fig1': [('fig1', {'snr_db_grid': (0.0,)})],
    'sweep': [('sumrate_sweep', {'n_t': 4, 'u': 4, 'trials': 1000})],
    'sched': [('sched_loss', {'n_t': 4, 'u': 4, 'trials': 1000}),
              ('ra_compare', {'n_t': 8, 'u': 8, 'trials': 200})],
    'tables': [('table_users', {'n_t': 8, 'u': 8, 'trials': 1000}),
               ('table_mults', {'n_t': 8, 'u': 8, 'trials': 1000})],
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='experiment seed')
    common.add_argument('--trials', type=int, help='channel realizations')
    common.add_argument('--out', help='CSV output path (run) or directory '
                        '(shortcuts)')
    common.add_argument('--workers', type=int, help='worker processes')
    common.add_argument('--no-plot', action='store_true',
                        help='skip the PNG figure')
    p = argparse.ArgumentParser(
        prog='vpbench',
        description='Vector perturbation precoding experiments.')
    sub = p.add_subparsers(dest='command', required=True)
    r = sub.add_parser('run', parents=[common],
                       help='run an experiment from a key=value config')
    r.add_argument('--config', required=True, help='config file')
    for name in SHORTCUTS:
        sub.add_parser(name, parents=[common],
                       help=f'preset: {", ".join(e for e, _ in SHORTCUTS[name])}')
    return p


def _report(cfg, table) -> None:
    where = cfg.out_path or '(not written)'
    print(f'{cfg.experiment}: {len(table.rows)} rows -> {where}')


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    flags = {'seed': args.seed, 'trials': args.trials,
             'workers': args.workers}
    if args.no_plot:
        flags['plot'] = False
    try:
        if args.command == 'run':
            cfg = load_config(args.config, out_path=args.out, **flags)
            _report(cfg, run(cfg))
            return 0
        out_dir = args.out or '.'
        for experiment, preset in SHORTCUTS[args.command]:
            values = dict(preset, experiment=experiment,
                          out_path=os.path.join(out_dir, experiment + '.csv'))
            values.update({k: v for k, v in flags.items() if v is not None})
            cfg = ExperimentConfig(**values)
            _report(cfg, run(cfg))
    except ConfigError as exc:
        print(f'vpbench: config error: {exc}', file=sys.stderr)
        return 2
    except (VPError, OSError) as exc:
        print(f'vpbench: error: {exc}', file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
