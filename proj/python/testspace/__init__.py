"""Exact test-space computations for metric characterizations of Banach space properties."""

from ._core import *  # noqa: F401,F403
from ._core import CapExceeded, Error, Undecided, ValidationError, __version__

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
