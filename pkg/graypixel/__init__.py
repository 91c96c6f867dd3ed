# graypixel/__init__.py
"""
Gray-pixel color constancy toolkit
"""

__version__ = "1.0.0"
