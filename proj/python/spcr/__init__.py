"""Supervised principal-component regression with kurtosis-based choice of
the number of components.

Arrays are NumPy float64. Responses may be 1-D (one response) or 2-D.
Column indices returned by the ranking functions are 0-based.
"""

import numpy as _np

from . import _spcr
from ._spcr import (
    DimensionSelection,
    Model,
    Ranking,
    SpcrError,
    kurtosis_max,
    lse,
    model_from_json,
    select_dimension,
    simulate_example,
    ub_k,
)

__all__ = [
    "DimensionSelection",
    "Model",
    "Ranking",
    "SpcrError",
    "fit",
    "kurtosis_max",
    "lse",
    "model_from_json",
    "rank",
    "select_dimension",
    "simulate_example",
    "sweep",
    "tau_prerank",
    "ub_k",
]


def _as_2d(a):
    a = _np.asarray(a, dtype=float)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def rank(x, y, scheme="b1"):
    """Rank columns of ``x``; ``scheme`` is one of b1, b2, bair, natural."""
    return _spcr.rank(_as_2d(x), _as_2d(y), scheme)


def tau_prerank(x, y, n_blocks=5, block_size=5000, keep=200, scheme="b1"):
    return _spcr.tau_prerank(_as_2d(x), _as_2d(y), n_blocks, block_size, keep, scheme)


def fit(x, y, m, method="knb1-pcH", h=None, seed=0):
    """Fit PCR on the ``m`` best-ranked columns. ``h=None`` selects H(m)."""
    return _spcr.fit(_as_2d(x), _as_2d(y), m, method, h, seed)


def sweep(x, y, methods, m_min, m_max, seed=0):
    return _spcr.sweep(_as_2d(x), _as_2d(y), list(methods), m_min, m_max, seed)
