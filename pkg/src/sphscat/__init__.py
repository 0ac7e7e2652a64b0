"""Exact series solutions for acoustic scattering by layered spherical shells."""

__version__ = "0.1.0"
