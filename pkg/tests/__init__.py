"""Tests for iasim."""
