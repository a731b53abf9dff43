"""Inter-domain ICN caching simulator: coordinated designated-router caching
against on-path baselines over AS/router hierarchies."""

__version__ = "0.1.0"
