"""Tikhonov-regularized recovery of orientation probabilities from diffraction frames."""
