"""Entity-linking candidate retrieval: anchor priors, profile-driven BM25 search,
gradient-boosted fusion and threshold NIL detection."""

__version__ = "0.1.0"
