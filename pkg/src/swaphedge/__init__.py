"""Regress-later semi-static hedging of Bermudan swaptions."""

__version__ = "0.1.0"
