"""Engagement prediction for customer-support conversations on Twitter."""

__version__ = "0.1.0"
