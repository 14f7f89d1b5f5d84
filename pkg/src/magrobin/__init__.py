"""Magnetic Laplacian eigenvalues with Robin boundary conditions on model surfaces."""

__version__ = "0.1.0"
