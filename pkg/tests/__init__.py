"""Tests for warped_cone_stability."""
