"""scenforge: scenario extraction, synthesis and safety-violation search."""

__version__ = "0.1.0"
