"""Certified positive-definiteness sweeps and finite-difference checks for the regularized generalized p-parabolic equation."""
__version__ = "0.1.0"
