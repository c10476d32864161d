"""Continual learning with winning subnetworks, spectral operators, and soft masks."""

__version__ = "0.1.0"

from . import diffcore, fso, harness, nir, softnet, subnet  # noqa: F401
