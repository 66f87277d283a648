"""Sudden quantum Otto refrigerator: exact segment propagators, limit cycles
and cycle-time sweeps for a coupled-spin working medium."""

__version__ = "0.1.0"
