"""Cluster paired gameplay frames and commentary, then predict comments from frames."""

__version__ = "0.1.0"
