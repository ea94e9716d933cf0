"""Separable harmonic vibrational wavepackets and their tomography."""
