"""Image codecs, frame discovery and pipeline config files."""
