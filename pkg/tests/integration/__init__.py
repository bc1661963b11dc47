"""Integration tests for mkg-lib-autoscale."""
