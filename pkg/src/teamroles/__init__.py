"""Author-role classification and prediction for scientific teams."""

__version__ = "0.1.0"
