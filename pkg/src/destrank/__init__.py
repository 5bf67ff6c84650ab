"""destrank: query-driven travel destination retrieval and benchmark harness."""

__version__ = "0.1.0"
