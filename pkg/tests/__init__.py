"""Tests for fcmir."""
