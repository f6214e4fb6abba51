"""Surface-electrode ion trap modelling: fields, pseudopotential, design and sensing."""

from ._surftrap import *  # noqa: F401,F403
from ._surftrap import __doc__  # noqa: F401

__version__ = "0.1.0"
