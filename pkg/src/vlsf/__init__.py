"""Information-density bounds and VLSF decoding over Gauss-Markov noncoherent fading."""

__version__ = "0.1.0"
