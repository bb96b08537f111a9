"""Concurrent batch execution of experiments with Academy agents."""
