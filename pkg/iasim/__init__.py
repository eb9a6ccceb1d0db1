"""iasim - interference alignment over MIMO interference channels with limited feedback."""

__version__ = "0.1.0"
