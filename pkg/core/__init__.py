# Core module for the quasi-adiabatic WKB toolkit

__version__ = "1.0.0"
