"""ripALM solver toolkit for quadratically regularized transport and basis pursuit denoising."""

__version__ = "0.1.0"
