"""Visual rewrite rule learning, planning agent, and grid game workbench."""

__version__ = "0.1.0"
