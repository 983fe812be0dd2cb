"""Interactive snow-scene kiosk engine."""

__version__ = "0.1.0"
