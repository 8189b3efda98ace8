"""Two-class unequal message protection codes over the binary-input AWGN channel."""

from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
