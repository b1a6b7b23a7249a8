"""Partner-conditioned motion generation with Fourier neural operators."""
__version__ = "0.1.0"
