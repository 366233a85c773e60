"""Ropelength-minimizing concentric helix configurations and torus-link closures."""
__version__ = "0.1.0"
