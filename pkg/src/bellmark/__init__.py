"""Bell-Mermin operators and separability witnesses for n-particle systems."""

__version__ = "0.1.0"
