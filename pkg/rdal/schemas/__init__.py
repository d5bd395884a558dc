"""Pydantic schemas for configuration, corpus records and metrics."""
