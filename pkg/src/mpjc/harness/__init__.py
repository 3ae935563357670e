"""Experiment configs, runner, figure datasets, CSV output, validation and CLI."""
