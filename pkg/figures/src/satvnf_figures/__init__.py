"""Figure rendering for the satellite placement simulator's CSV output."""

__version__ = "0.1.0"
