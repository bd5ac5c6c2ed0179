"""Filtrations of graded graphs: measured trees, standardness statistics, minimal models,
Markov realizations, simplex diagnostics and matrix distributions."""

__version__ = "0.1.0"
