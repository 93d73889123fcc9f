"""Canned endpoint responses for the mock server."""
