"""Score-conditioned interactive modulation for real-world super-resolution.

Desk-scale library: a fixed-vocabulary autodiff core, a high-order
degradation synthesis engine, an unsupervised two-branch degradation
scorer trained by margin ranking with anchor regression, and a
score-modulated x4 restorer, plus evaluation sweeps, a CLI and an HTTP
inference service.
"""

__version__ = "0.1.0"

from modsr import autodiff  # noqa: F401
