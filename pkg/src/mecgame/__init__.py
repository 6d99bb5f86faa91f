"""Multi-user mobile-edge-computing offloading game."""
__version__ = "0.1.0"
