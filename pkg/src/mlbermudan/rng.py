"""Reproducible, splittable random streams.

Every consumer of randomness is addressed by an integer key tuple such as
``(repetition, level, role)``.  Keys map to independent Philox streams through
``numpy.random.SeedSequence`` spawn keys, so results never depend on the order
in which streams are created or on how work is split across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# role namespaces; training and testing never share a stream
TRAIN = 0
TEST = 1
REFERENCE = 2
AUX = 3


@dataclass(frozen=True)
class Stream:
    seed: int
    key: tuple[int, ...] = ()

    def child(self, *key: int) -> "Stream":
        return Stream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))

    def __str__(self) -> str:
        return f"{self.seed}:" + "/".join(str(k) for k in self.key)


def as_stream(stream: Stream | int | None) -> Stream:
    if isinstance(stream, Stream):
        return stream
    return Stream(0 if stream is None else int(stream))
