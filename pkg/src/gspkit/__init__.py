"""Scheduling with general cost functions via rectangle covering."""

__version__ = "0.1.0"
