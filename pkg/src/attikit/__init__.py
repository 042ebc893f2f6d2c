"""attikit: desk-scale inertial attitude estimation toolkit."""

__version__ = "0.1.0"
