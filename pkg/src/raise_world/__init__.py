"""raise-world: branching-scenario engine and world server for environmental education games."""

__version__ = "0.1.0"
