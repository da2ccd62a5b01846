"""Continuous-measurement readout of a qubit register."""

from ._core import *  # noqa: F401,F403
from ._core import __version__, IntegrationError  # noqa: F401
