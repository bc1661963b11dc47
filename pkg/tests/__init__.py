"""Tests for mkg-lib-autoscale."""
