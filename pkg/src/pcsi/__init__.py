"""Structured content objects from HTML via Hex scripts, plus the records
that say which script to run for a URL and how it went."""

__version__ = "0.1.0"
