"""Monodromy of rank-two flat connections on the four-punctured sphere and the
one-punctured torus, their character varieties, and branched-cover pullbacks."""

__version__ = "0.1.0"
