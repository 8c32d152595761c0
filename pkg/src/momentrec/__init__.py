"""Moment-conditioned music recommendations from a single listener's history."""

__version__ = "0.1.0"
