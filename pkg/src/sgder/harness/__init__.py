"""Experiment orchestration: configs, the epoch loop, reports and the CLI."""
