"""Subcommand implementations for the wcs CLI."""
