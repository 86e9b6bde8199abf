"""Shared test fixtures and configuration."""
