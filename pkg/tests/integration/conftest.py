"""Integration test fixtures."""

from tests.unit.conftest import rng  # noqa: F401
