"""Shared test support helpers."""

