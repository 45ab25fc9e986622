"""hsumhr package."""

from hsumhr.api import Client

__all__ = ["__version__", "Client"]

__version__ = "0.1.0"
