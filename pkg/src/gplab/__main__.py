"""Module entry point: python -m gplab behaves like the gplab script."""

from .cli import run

run()
