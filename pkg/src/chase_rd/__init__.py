"""Rate-distortion guided stochastic Chase decoding toolkit."""

__version__ = "0.1.0"
