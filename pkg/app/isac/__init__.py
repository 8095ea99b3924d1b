"""Movable-antenna ISAC transmit design: beams, antenna positions and their evaluation."""

__version__ = "0.1.0"
