"""Dissipative four-phonon state generation: simulator and closed-form oracle."""

__version__ = "0.1.0"
