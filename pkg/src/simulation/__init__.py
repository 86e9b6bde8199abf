"""Synthetic tensor factor data: AR factors, decaying-strength loadings, structured noise, missing patterns."""
