"""
tests.utils.utils

Test cases for seed parsing, the YAML-driven argument parser and settings.
"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from eqkernel.utils.settings import Settings, settings
from eqkernel.utils.utils import build_parser, parse_seeds


@pytest.mark.parametrize(
    "text, expected",
    [
        ("0,1,2", [0, 1, 2]),
        ("0-4", [0, 1, 2, 3, 4]),
        ("3, 10-12", [3, 10, 11, 12]),
        ("2,2,1", [2, 1]),
        ("7", [7]),
    ],
)
def test_parse_seeds(text, expected):
    assert parse_seeds(text) == expected


@pytest.mark.parametrize("text", ["", "5-2", "a", "-3", ","])
def test_parse_seeds_rejects(text):
    with pytest.raises(ValueError):
        parse_seeds(text)


def test_parser_builds_every_command():
    parser = build_parser()
    args = parser.parse_args(["rff-sweep", "-c", "x.yaml", "--seeds", "0-2", "-t", "3"])

    assert args.command == "rff-sweep"
    assert args.handler == "run_experiment"
    assert args.config == Path("x.yaml")
    assert args.seeds == [0, 1, 2]
    assert args.threads == 3
    assert args.no_timing is False


def test_parser_defaults():
    args = build_parser().parse_args(["mercer-demo", "--config", "m.yaml"])
    assert args.seeds is None
    assert args.out is None
    assert args.threads == settings.app_threads


def test_parser_requires_config():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["bounds"])


def test_test_command():
    args = build_parser().parse_args(["test", "-k", "rff"])
    assert args.handler == "run_tests"
    assert args.keyword == "rff"


def test_settings_log_level(monkeypatch):
    monkeypatch.setenv("EQK_LOG_LEVEL", "debug")
    assert Settings().log_level == "DEBUG"

    monkeypatch.setenv("EQK_LOG_LEVEL", "chatty")
    with pytest.raises(ValidationError):
        Settings()


def test_settings_paths_exist():
    assert settings.cli_path.is_file()
    assert (settings.experiments_dir / "rff_sweep.yaml").is_file()
