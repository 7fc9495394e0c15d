"""Steady-state photon statistics of a single-atom microlaser."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
