"""
Configuration Module
"""

from graypixel.config.settings import Settings, settings

__all__ = ["Settings", "settings"]
