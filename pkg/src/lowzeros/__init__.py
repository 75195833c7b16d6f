"""Low-lying zeros of Dirichlet L-functions: explicit formula, both sides."""

__version__ = "0.1.0"
