"""
Command line interface.

    circe run <config> [--seed N] [--out DIR] [--noiseless]
    circe validate <config>
    circe reproduce <recipe> [--seed N] [--out DIR] [--noiseless]

The default output directory is $CIRCE_OUTPUT/<name>, or ./circe_output/<name>.
Exit codes: 0 success, 2 invalid configuration, 3 failure while running.
"""
import argparse
import sys

from CIRCE.config import OUTPUT_ENV, load_config, recipe_path, shipped_recipes, validate
from CIRCE.pipelines import RECIPES, RecipeRunner
from CIRCE.utils.base import Logger
from CIRCE.utils.exceptions import PipelineError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

_log = Logger('cli')


def _add_run_options(parser):
    parser.add_argument('--seed', type=int, default=None, help="seed of the shot sampling")
    parser.add_argument('--out', default=None, help="output directory (default: $%s/<name>)" % OUTPUT_ENV)
    parser.add_argument('--noiseless', action='store_true', help="expectation values instead of sampled shots")


def build_parser():
    parser = argparse.ArgumentParser(prog='circe', description="Circular Rydberg core-spectroscopy simulator")
    parser.add_argument('--debug', action='store_true', help="verbose logging")
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help="run a configuration file")
    run.add_argument('config')
    _add_run_options(run)

    check = commands.add_parser('validate', help="check a configuration file without running it")
    check.add_argument('config')

    reproduce = commands.add_parser('reproduce', help="run a shipped recipe",
                                    description='\n'.join('%s: %s' % (name, RECIPES[name].description)
                                                          for name in sorted(RECIPES)))
    reproduce.add_argument('recipe', choices=shipped_recipes())
    _add_run_options(reproduce)
    return parser


def execute(config, debug=False):
    try:
        summary = RecipeRunner(config, debug=debug).run()
    except PipelineError as e:
        _log.error("Stage '%s' failed: %s", e.step, e)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError, OSError) as e:
        _log.error("Run '%s' failed: %s", config.name, e)
        return EXIT_RUNTIME
    for name, row in summary.items():
        _log.info("%s = %.9g +- %.3g %s", name, row['value'], row['sigma'], row['unit'])
    _log.info("Results written to %s", config.output)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == 'validate':
        diagnostics = validate(args.config)
        for diagnostic in diagnostics:
            print(diagnostic)
        return EXIT_VALIDATION if diagnostics else EXIT_OK

    path = args.config if args.command == 'run' else recipe_path(args.recipe)
    try:
        config = load_config(path, seed=args.seed, output=args.out, noiseless=args.noiseless)
    except ValidationError as e:
        for diagnostic in e.diagnostics:
            _log.error("%s", diagnostic)
        return EXIT_VALIDATION
    return execute(config, args.debug)


if __name__ == '__main__':
    sys.exit(main())
