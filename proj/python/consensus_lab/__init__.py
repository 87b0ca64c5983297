from consensus_lab._core import *  # noqa: F401,F403
