"""
eqkernel.utils.utils

Project utilities / helper functions.

"""

from __future__ import annotations

import argparse
from pathlib import Path

import yaml

ROOT_MARKER = "pyproject.toml"


def find_project_root(marker: str = ROOT_MARKER) -> Path:
    """First directory at or above the working directory holding `marker`; the cwd if none does."""

    current = Path.cwd().resolve()
    for parent in [current, *current.parents]:
        if (parent / marker).exists():
            return parent
    return current


def parse_seeds(text: str) -> list[int]:
    """
    Parse a seed override such as "0,1,2" or "0-49" or "3,10-12".

    Ranges are inclusive. Order is kept and duplicates dropped.
    """

    seeds: list[int] = []
    for chunk in text.replace(" ", "").split(","):
        if not chunk:
            continue
        head, sep, tail = chunk.partition("-")
        if sep and head:
            start, stop = int(head), int(tail)
            if stop < start:
                raise ValueError(f"Seed range {chunk!r} is descending.")
            seeds.extend(range(start, stop + 1))
        else:
            seeds.append(int(chunk))

    if not seeds:
        raise ValueError(f"No seeds found in {text!r}.")
    if any(s < 0 for s in seeds):
        raise ValueError("Seeds must be non-negative.")
    return list(dict.fromkeys(seeds))


def _seed_list(text: str) -> list[int]:
    try:
        return parse_seeds(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


TYPE_MAP = {"int": int, "str": str, "float": float, "bool": bool, "path": Path, "seeds": _seed_list}


def build_parser(cli_path: Path | None = None) -> argparse.ArgumentParser:
    from ..utils.settings import settings

    with open(cli_path or settings.cli_path) as f:
        config = yaml.safe_load(f)

    parser = argparse.ArgumentParser(
        prog=config["program"]["name"],
        description=config["program"]["description"],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    shared = config.get("shared_args", {})

    for cmd_name, cmd_def in config["commands"].items():
        sub = subparsers.add_parser(cmd_name, help=cmd_def.get("help", ""))
        args = {name: shared[name] for name in cmd_def.get("shared", [])}
        args.update(cmd_def.get("args", {}))

        for arg_name, arg_opts in args.items():
            flags = arg_opts.get("flags", [f"--{arg_name.replace('_', '-')}"])
            kwargs = {"dest": arg_name}

            if "help" in arg_opts:
                kwargs["help"] = arg_opts["help"]

            if "type" in arg_opts:
                kwargs["type"] = TYPE_MAP.get(arg_opts["type"], str)

            if "default" in arg_opts:
                # Support pulling defaults from settings dynamically
                kwargs["default"] = getattr(settings, f"app_{arg_name}", arg_opts["default"])

            for key in ("action", "required", "choices"):
                if key in arg_opts:
                    kwargs[key] = arg_opts[key]

            sub.add_argument(*flags, **kwargs)

        sub.set_defaults(handler=cmd_def.get("func"))

    return parser
