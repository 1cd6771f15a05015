"""Collapse-model (CSL) density-matrix propagators in the large-localization-length limit."""

__version__ = "0.1.0"
