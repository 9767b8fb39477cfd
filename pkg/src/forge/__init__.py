"""Floor-plan LIDAR exploration toolkit.

Synthesizes occupancy-grid / wall-segment training data from vector floor
plans, encodes segment sets as token sequences, and evaluates wall
predictors by predicted information gain at frontiers.
"""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
