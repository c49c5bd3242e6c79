"""Numerical model of a PMD emulator: DGD sections between time-variable retarders."""

__version__ = "0.1.0"
