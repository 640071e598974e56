"""Numerical laboratory for the resonant Majda-Biello system."""
