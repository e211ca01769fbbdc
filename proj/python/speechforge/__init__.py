"""Speech-text interleaved pretraining data toolkit."""

from ._speechforge import *  # noqa: F401,F403
from ._speechforge import __version__  # noqa: F401
