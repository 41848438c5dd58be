"""Nonlinear Schrodinger ground states and dynamics on metric graphs."""
