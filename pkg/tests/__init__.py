"""Tests for smoothcheck."""
