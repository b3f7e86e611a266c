"""esgminer: mine news headlines for per-company ESG sentiment scores."""

__version__ = "0.1.0"
