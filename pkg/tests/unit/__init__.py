"""Unit tests for proxaddr modules."""
