"""
eqkernel.cli

CLI for running eqkernel experiments.

Exit codes: 0 success, 1 config error, 2 guard violation.
"""

from __future__ import annotations

import argparse
import subprocess
import sys
from pathlib import Path

from .core._errors import ConfigError, EqkernelError, GuardError
from .utils.logger import console, setup_logging, summary_table

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_GUARD = 2


class Commands:
    @staticmethod
    def run_tests(args):
        """Run pytest with coverage report."""
        console.rule("[bold cyan]Running Test Suite with Coverage[/bold cyan]")

        cmd = ["pytest", "--cov=eqkernel", "--cov-report=term-missing", "-v"]

        if args.keyword:
            cmd.extend(["-k", args.keyword])

        try:
            result = subprocess.run(cmd)
        except FileNotFoundError:
            console.print("[bold red]pytest not found![/bold red] Install with `pip install -e .[test]`")
            return EXIT_CONFIG

        if result.returncode == 0:
            console.print("\n[bold green] Complete Coverage Report returned. [/bold green]")
        return result.returncode

    @staticmethod
    def run_experiment(args):
        """Load the config, run the command's experiment and write its CSV."""
        from .pipelines.experiments import run_experiment
        from .pipelines.records import load_config, write_frame
        from .utils.settings import settings

        config = load_config(args.config, seeds=args.seeds)
        out = args.out or config.output or Path("results") / f"{config.experiment_id}.csv"
        timing = settings.write_wall_time and not args.no_timing

        console.rule(f"[bold cyan]{args.command}[/bold cyan] {config.experiment_id}")
        frame = run_experiment(args.command, config, threads=args.threads, timing=timing)
        path = write_frame(frame, out)

        console.print(summary_table(frame, title=f"{args.command}: {config.experiment_id}"))
        console.print(f"[green]Wrote {len(frame)} rows to[/green] {path}")
        return EXIT_OK


def dispatch(args: argparse.Namespace) -> int:
    handler = getattr(Commands, args.handler, None)
    if handler is None:
        console.print(f"[red]Unknown command: {args.command}[/red]")
        return EXIT_CONFIG

    try:
        return handler(args)
    except ConfigError as e:
        console.print(f"[bold red]Config error:[/bold red] {e}")
        return EXIT_CONFIG
    except GuardError as e:
        console.print(f"[bold red]Guard violation:[/bold red] {e}")
        return EXIT_GUARD
    except EqkernelError as e:
        console.print(f"[bold red]{type(e).__name__}:[/bold red] {e}")
        return EXIT_CONFIG


def main(argv: list[str] | None = None) -> int:
    from .utils.settings import settings
    from .utils.utils import build_parser

    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_OK

    setup_logging(debug=getattr(args, "debug", False) or settings.debug, level=settings.log_level)
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
