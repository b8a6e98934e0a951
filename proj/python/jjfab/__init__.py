"""Josephson junction fabrication variability model."""

from ._jjfab import *  # noqa: F401,F403
from ._jjfab import __doc__  # noqa: F401
