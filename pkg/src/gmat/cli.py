"""Command-line entry point: ``gmat sweep --config CFG --out CSV``."""

import argparse
import logging
import sys

from .sweep import ConfigError, emit_csv, emit_plot_data, parse_config, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(prog='gmat', description=__doc__)
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)
    sw = sub.add_parser('sweep', help='run a Monte-Carlo sum-rate sweep')
    sw.add_argument('--config', required=True, help='key=value sweep description')
    sw.add_argument('--out', required=True, help='CSV output path')
    sw.add_argument('--plot-data', help='optional per-scheme column layout for plotting')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(message)s')
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        curves = run_sweep(cfg)
        emit_csv(curves, args.out)
        if args.plot_data:
            emit_plot_data(curves, args.plot_data)
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for c in curves:
        if c.dropped:
            logging.warning("%s: %d realizations dropped (optimizer divergence)",
                            c.scheme, c.dropped)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
