"""Simulation harness: ground-truth densities, scripted studies, and the CLI."""

from . import densities, studies  # noqa: F401
