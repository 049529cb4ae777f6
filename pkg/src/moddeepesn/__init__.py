"""Modular deep echo state networks."""
