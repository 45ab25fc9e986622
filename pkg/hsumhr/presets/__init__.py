"""Packaged pipeline presets."""
