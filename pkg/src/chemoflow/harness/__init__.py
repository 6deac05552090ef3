"""Scenario configuration, long-time runs, convergence studies and checkpoints."""
