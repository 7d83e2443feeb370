"""Experiment orchestration, planted verification model, reports and CLI."""
