"""Closed-loop LLM flight-script generation with natural-language trajectory feedback."""

__version__ = "0.1.0"
