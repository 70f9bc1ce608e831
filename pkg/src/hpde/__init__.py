"""Primitive-equations solver with a discrete hydrostatic Leray projector."""

__version__ = "0.1.0"
