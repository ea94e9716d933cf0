"""Molecular form factors, detector geometry, kernel assembly and forward simulation."""
