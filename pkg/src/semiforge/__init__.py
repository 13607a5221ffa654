"""Semi-supervised learning toolkit: algorithms, training harness and benchmark ranking."""
__version__ = "0.1.0"
