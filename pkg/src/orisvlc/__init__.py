"""ORIS-assisted multi-user VLC: channel model, ORIS allocation and outage simulation."""

__version__ = "0.1.0"
