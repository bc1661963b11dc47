"""Unit tests for mkg-lib-autoscale."""
