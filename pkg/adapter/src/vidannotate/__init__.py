"""vidannotate: detector-to-annotation adapter for the scene-search engine."""

__version__ = "0.1.0"
