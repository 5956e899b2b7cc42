"""Multi-agent submodular optimization: relaxations, roundings, lifting, certification."""

__version__ = "0.1.0"
