import argparse
import logging
import sys
from pathlib import Path

from rich.logging import RichHandler

from beamsync import main as _main
from beamsync.errors import BeamsyncError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def argument_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='First seed; the seed list becomes seed, seed+1, ...')
    common.add_argument('--horizon', type=int, help='Override the number of timeslots')
    common.add_argument('--out-dir', type=Path, help='Root directory for outputs')
    common.add_argument('--verbose', '-v', action='store_true', help='Debug logging')

    argp = argparse.ArgumentParser(prog="beamsync")
    subparsers = argp.add_subparsers(dest='command')

    run = subparsers.add_parser('run', parents=[common], help='Run experiments from a YAML config file')
    run.add_argument('config', metavar='CONFIG', help='Path to the YAML config file')
    run.add_argument('--experiment', '-e', nargs='+', metavar='experiments', help='Run only these experiments')
    run.add_argument('--check', action='store_true', help='Exit with status 1 if any check fails')

    preset = subparsers.add_parser('preset', parents=[common], help='Run a bundled preset')
    preset.add_argument('name', metavar='NAME')
    preset.add_argument('--check', action='store_true', help='Exit with status 1 if any check fails')

    check = subparsers.add_parser('check', parents=[common], help='Run a preset and evaluate its acceptance checks')
    check.add_argument('name', metavar='NAME')

    subparsers.add_parser('list', help='List bundled presets')

    return argp


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=_main.console, show_path=False)],
        force=True,
    )


def _exit_code(results, enforce_checks: bool) -> int:
    if enforce_checks and not all(r.passed for r in results):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def exec_run(args) -> int:
    results = _main.run_experiments(args.config, args.experiment, args.seed, args.horizon, args.out_dir)
    _main.show_results(results, show_checks=args.check)
    return _exit_code(results, args.check)


def exec_preset(args) -> int:
    result = _main.run_preset(args.name, args.seed, args.horizon, args.out_dir)
    _main.show_results([result], show_checks=args.check)
    return _exit_code([result], args.check)


def exec_check(args) -> int:
    result = _main.run_preset(args.name, args.seed, args.horizon, args.out_dir)
    _main.show_results([result])
    if not result.checks:
        _main.console.print(f"[yellow]Preset '{args.name}' declares no checks[/yellow]")
    return _exit_code([result], True)


def exec_list(args) -> int:
    _main.list_presets()
    return EXIT_OK


def main(argv=None) -> int:
    parsed = argument_parser().parse_args(argv)
    configure_logging(getattr(parsed, 'verbose', False))
    commands = {
        'run': exec_run,
        'preset': exec_preset,
        'check': exec_check,
        'list': exec_list,
    }
    if parsed.command not in commands:
        argument_parser().print_help()
        return EXIT_CONFIG_ERROR
    try:
        return commands[parsed.command](parsed)
    except BeamsyncError as e:
        _main.console.print(f"[bold red]Error:[/bold red] {e}")
        return EXIT_CONFIG_ERROR


def exec_cli():
    sys.exit(main())


if __name__ == '__main__':
    exec_cli()
