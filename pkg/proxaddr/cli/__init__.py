"""Scenario runner and report generator."""
