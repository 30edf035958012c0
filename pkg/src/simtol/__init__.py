"""Error-tolerant string and set matching: entity extraction, similarity
joins and threshold search, each with a brute-force reference."""

from .core import EXCEEDED, RunStats, Sim, SimilaritySpec

__version__ = "0.1.0"

__all__ = ["EXCEEDED", "RunStats", "Sim", "SimilaritySpec", "__version__"]
