"""Oblique projections, tight nonorthogonal fusion frames and random fusion frames."""
from . import errors
from .correlation import *  # noqa: F401,F403
from .errors import NoffError
from .frames import *  # noqa: F401,F403
from .projection import Projection
from .random_frames import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403
from .synthesis import *  # noqa: F401,F403

__version__ = "0.1.0"
