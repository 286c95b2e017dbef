"""Carleman weights and weighted resolvent norms for radial semiclassical Schrodinger operators."""

from ._carleman import *  # noqa: F401,F403
from ._carleman import __doc__  # noqa: F401
