"""Rich logging and console output for eqkernel."""

from __future__ import annotations

import logging

import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

console = Console()


def setup_logging(debug: bool = False, level: str = "INFO") -> None:
    """Configure logging using Rich's handler."""

    log_level = logging.DEBUG if debug else logging.getLevelName(level.upper())

    logging.basicConfig(
        level=log_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=debug)],
        force=True,
    )

    logging.getLogger("eqkernel").setLevel(log_level)
    for noisy in ("joblib", "matplotlib"):
        logging.getLogger(noisy).setLevel(logging.WARNING)


def summary_table(frame: pd.DataFrame, title: str, max_rows: int = 20) -> Table:
    """Render the head of a result frame as a rich table."""

    table = Table(title=title, show_lines=False, header_style="bold cyan")
    for column in frame.columns:
        table.add_column(str(column), justify="right" if pd.api.types.is_numeric_dtype(frame[column]) else "left")

    for row in frame.head(max_rows).itertuples(index=False):
        table.add_row(*(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row))

    if len(frame) > max_rows:
        table.caption = f"{len(frame) - max_rows} more rows in the CSV"
    return table
