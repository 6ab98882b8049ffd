"""Behavioral analysis toolkit for stacked class-D drivers and their level shifters."""

__version__ = "0.1.0"
