#!/usr/bin/env python3
"""
Shnolkit - numerical experiments on Jacobi operators

Solves three-term recurrences, computes finite-section spectra and builds
Weyl-vector certificates that bound the distance from lambda to the spectrum.
"""

import argparse
import sys
from pathlib import Path

# Add src to path for cross-platform compatibility
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

from core.errors import ConfigError, ShnolError
from core.experiment import EXIT_ERROR, ShnolKit
from utils.config import COMMANDS, ExperimentConfig
from utils.logger import default_level, setup_logger


def create_arg_parser() -> argparse.ArgumentParser:
    """Create command line argument parser"""
    parser = argparse.ArgumentParser(
        description="Shnolkit - spectral experiments for Jacobi operators and three-term recurrences",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Reproduce the weighted example: hypotheses, spectrum and certificates
  shnolkit wimp --config experiments/wimp.json --out results/wimp

  # Scan a lambda grid on the free operator with 4 workers
  shnolkit scan --config experiments/free_scan.json --threads 4

  # Check the standing hypotheses for a super-exponential family
  shnolkit classify --config experiments/superexponential.json
        """
    )

    parser.add_argument(
        'command',
        choices=COMMANDS,
        help='Experiment command to run'
    )

    config_group = parser.add_argument_group('configuration')
    config_group.add_argument(
        '--config',
        required=True,
        help='Experiment document (JSON)'
    )
    config_group.add_argument(
        '--settings',
        default='config/config.yaml',
        help='Tool-wide defaults (default: config/config.yaml)'
    )
    config_group.add_argument(
        '--out',
        help='Output directory (default: experiment "output" or settings output_dir)'
    )
    config_group.add_argument(
        '--threads',
        type=int,
        help='Worker processes for lambda grids, N lists and bisection chunks'
    )
    config_group.add_argument(
        '--log-level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='Logging level (default: SHNOLKIT_LOG_LEVEL or INFO)'
    )
    config_group.add_argument(
        '--verbose', '-v',
        action='store_true',
        help='Enable verbose output (equivalent to --log-level DEBUG)'
    )

    return parser


def main(argv=None):
    """Main entry point"""
    parser = create_arg_parser()
    args = parser.parse_args(argv)

    log_level = 'DEBUG' if args.verbose else (args.log_level or default_level())
    logger = setup_logger(log_level)

    try:
        experiment = ExperimentConfig.from_file(args.config)
        if experiment.command != args.command:
            raise ConfigError(
                f"Experiment document is for '{experiment.command}', not '{args.command}'", key='command'
            )
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1", key='threads')

        settings_path = Path(args.settings)
        kit = ShnolKit(str(settings_path) if settings_path.exists() else None)
        # settings may carry their own level; the command line wins
        setup_logger(log_level)

        result = kit.run(experiment, output_dir=args.out, threads=args.threads)
        for path in result.files:
            logger.info(f"Wrote {path}")
        return result.exit_code

    except ConfigError as e:
        key = f" (key: {e.key})" if e.key else ""
        logger.error(f"Error: {e}{key}")
        print(f"Error: {e}{key}", file=sys.stderr)
        return EXIT_ERROR

    except (ShnolError, OSError, ValueError) as e:
        logger.error(f"Error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
