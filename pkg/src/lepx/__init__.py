"""Monte Carlo laboratory for the loop-erased percolation exploration process."""

__version__ = "0.1.0"
