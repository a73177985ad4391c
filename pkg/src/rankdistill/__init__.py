"""Ranking-distillation toolkit for multi-label tasks with insufficient labels.

A teacher trained on deliberately incomplete labels produces answer
rankings; a student is distilled from those rankings through adaptive
pairwise (uncertainty + optimal-transport soft margins) or partial listwise
(hot/cold sampling) ranking losses, and compared against label-smoothing,
pseudo-labeling and vanilla-KD baselines on hidden-label recovery.
"""

__version__ = "0.1.0"

from .backend import BACKEND_NAME, HAVE_COMPILED

__all__ = ["__version__", "BACKEND_NAME", "HAVE_COMPILED"]
