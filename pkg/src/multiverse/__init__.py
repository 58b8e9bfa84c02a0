"""Multi-head orthogonal cross-entropy ("multiverse") training and analysis."""
from ._backend import NAME as BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
