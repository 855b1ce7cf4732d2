"""Environment-adaptive multi-robot formation navigation toolkit."""

__version__ = "0.1.0"
