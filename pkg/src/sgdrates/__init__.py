"""SGD for strongly convex stochastic optimization, with several ways of averaging the iterates."""

__version__ = "0.1.0"
