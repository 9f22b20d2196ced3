"""Homogenized stable norms of periodic interfacial energies, with calibration certificates."""

__version__ = "0.1.0"
