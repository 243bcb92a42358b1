"""Neural-network fields with built-in interface kinks and corner singularities."""

__version__ = "0.1.0"
