"""Reliability of K-repetition multichannel random access over Rayleigh fading."""

__version__ = "0.1.0"
