"""Ultrafast diffraction simulation and quantum state tomography."""

__version__ = "0.1.0"
