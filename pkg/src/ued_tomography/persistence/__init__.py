"""Artifact directories: manifests, binary arrays and CSV reports."""
