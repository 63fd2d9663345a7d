"""Desk-scale simulator and protocol library for covert verifiable quantum learning."""

__version__ = "0.1.0"
