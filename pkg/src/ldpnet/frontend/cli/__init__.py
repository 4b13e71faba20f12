"""Command line interface built on argparse."""

from .commands import build_parser, main, register_commands

__all__ = ["build_parser", "main", "register_commands"]
