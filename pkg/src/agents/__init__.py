"""Experiment orchestration and report output."""
