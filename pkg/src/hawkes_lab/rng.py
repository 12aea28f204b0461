"""Seed derivation.

Every random stream is keyed by ``(master_seed, path_index, component)``::

    SeedSequence(master_seed, spawn_key=(path_index, component))

so a path's draws never depend on how paths are spread over workers.
"""

from __future__ import annotations

import numpy as np

EVENTS = 0
MARKS = 1
REGIME = 2


def child_seed(seed, path_index: int = 0, component: int = EVENTS) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        key = tuple(seed.spawn_key) + (path_index, component)
        return np.random.SeedSequence(seed.entropy, spawn_key=key)
    return np.random.SeedSequence(int(seed), spawn_key=(path_index, component))


def generator(seed, path_index: int = 0, component: int = EVENTS) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(child_seed(seed, path_index, component)))


def as_generator(seed) -> np.random.Generator:
    """Generator for a bare seed (int, SeedSequence or Generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def with_uniforms(gen: np.random.Generator, size: int, fn):
    """Call ``fn(u)`` on a uniform buffer, doubling it until ``fn`` has enough.

    ``fn`` returns a tuple whose last item is a status code from ``_loops``.
    """
    from ._loops import OUT_OF_UNIFORMS

    u = gen.random(max(int(size), 16))
    while True:
        result = fn(u)
        if result[-1] != OUT_OF_UNIFORMS:
            return result
        u = np.concatenate([u, gen.random(u.shape[0])])
