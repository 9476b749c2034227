"""Sample scoring and data pruning for small classifiers.

Thin wrapper over the compiled ``moso._moso`` extension: train with
deterministic SGD, score every sample (exact leave-one-out or the
gradient-inner-product approximator, plus difficulty baselines), prune,
and evaluate the resulting coreset.
"""

from moso._moso import *  # noqa: F401,F403
from moso._moso import __version__  # noqa: F401
