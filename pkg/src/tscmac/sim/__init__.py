"""Discrete-event simulation, traffic, baselines and experiment helpers."""
