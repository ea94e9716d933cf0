"""Blockwise tomography of rotational density matrices."""
