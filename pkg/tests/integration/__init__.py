"""Integration tests for the semwidth package."""
