"""Toolkit version, stamped into reports for provenance."""

__version__ = "0.1.0"
