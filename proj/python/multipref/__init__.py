"""Multi-sample DPO/IPO on toy tabular and linear-softmax policies."""

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, NumericalError  # noqa: F401

__version__ = "0.1.0"
