"""Compiler bug isolation with LLM-generated witness programs."""

__version__ = "0.1.0"
