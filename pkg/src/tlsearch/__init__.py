"""tlsearch: temporal-logic scene search over per-frame video annotations."""

__version__ = "0.1.0"
