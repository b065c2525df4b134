"""GPIS-based tactile exploration and grasp-search simulator."""

__version__ = "0.1.0"
