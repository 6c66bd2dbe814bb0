"""Toolkit for turning show programme scans into transcriptions and linked data."""

__version__ = "0.1.0"
