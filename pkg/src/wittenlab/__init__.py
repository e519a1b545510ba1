"""Numerical laboratory for Witten Laplacians, model oscillator kernels and Morse inequalities."""

__version__ = "0.1.0"
