"""HTTP prediction service: trained models load once, queries stay cheap."""

from .app import create_app

__all__ = ["create_app"]
