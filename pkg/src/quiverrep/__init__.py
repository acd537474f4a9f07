"""Quiver representations at finite truncation."""
