"""Robust improvements of actions under unknown beliefs and utilities."""

__version__ = "0.1.0"
