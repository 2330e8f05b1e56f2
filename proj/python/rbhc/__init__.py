# Apache License, Version 2.0, refer to LICENSE.txt
"""Hierarchical clustering on exponential-family (Bregman) dissimilarities.

The heavy lifting lives in the compiled extension; this package re-exports
its functions:

- :func:`cluster` — threshold agglomeration (greedy or nearest-neighbour
  chain) over a family's merge dissimilarity.
- :func:`select_lambda` — k-means over-segmentation heuristic for the merge
  threshold.
- :func:`bhc` — Bayesian agglomeration with per-merge posteriors under a
  conjugate observation model.
- :func:`adjusted_rand_index` — partition agreement score.
- :func:`generate` — labeled synthetic mixture datasets.
- :func:`reducibility` — Monte-Carlo reducibility / approximation-error
  harness.
"""

from ._core import (
    adjusted_rand_index,
    bhc,
    cluster,
    generate,
    reducibility,
    select_lambda,
)

__all__ = [
    "adjusted_rand_index",
    "bhc",
    "cluster",
    "generate",
    "reducibility",
    "select_lambda",
]

__version__ = "0.1.0"
