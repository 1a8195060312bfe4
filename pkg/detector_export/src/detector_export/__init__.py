"""Export scripts producing groundcast-ingestible detector dumps."""

__version__ = "0.1.0"
