"""Exclusive (abort-capable) decoders for the rotated surface code."""

__version__ = "0.1.0"
