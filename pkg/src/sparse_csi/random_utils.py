"""Seeded random-stream helpers.

All stochastic operations in this package take an explicit
``numpy.random.Generator``; nothing reads global RNG state. Experiments
derive independent substreams keyed on integers so that results are
reproducible regardless of execution order or parallelism.
"""

from __future__ import annotations

import numpy as np


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Circularly-symmetric complex normal samples with unit variance.

    Real and imaginary parts are i.i.d. N(0, 1/2), so E|x|^2 = 1.
    """
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``(seed, *key)``.

    Streams for distinct keys are statistically independent, and the
    mapping is stable across processes and numpy versions that share the
    same SeedSequence algorithm.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))
