"""Uniform spanning tree branches, their partition functions and multiple SLE(2)."""

__version__ = "0.1.0"
