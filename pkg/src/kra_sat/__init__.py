"""Knowledge Recognition Algorithm (KRA) for 3-SAT, as a verifiable solver."""

__version__ = "0.1.0"
