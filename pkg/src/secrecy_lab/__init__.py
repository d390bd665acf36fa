"""Desk-scale checks of individual secrecy from Marton coding alone.

Modules
-------
channel   distributions, broadcast channels, information measures, typicality
ballbins  occupancy mean/variance, exact law and Monte Carlo
codebook  Marton codebooks, pair preselection, distinct-sequence counting
secrecy   exact eavesdropper leakage, decoders and error estimates
region    linear systems, Fourier-Motzkin elimination, rate polygons
cli       ``secrecy-lab`` command line front end
"""

from ._util import SizeGuardError, ValidationError

__version__ = "0.1.0"

__all__ = ["SizeGuardError", "ValidationError", "__version__"]
