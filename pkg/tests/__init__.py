"""Test suite for proxaddr."""
