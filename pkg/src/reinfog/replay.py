"""Experience containers: bounded FIFO buffer and reservoir-sampled buffer."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Experience:
    state: tuple[float, ...]
    action: int
    reward: float
    next_state: tuple[float, ...]
    done: bool


def _sample(items, k: int, rng: np.random.Generator) -> list[Experience]:
    if k > len(items):
        raise ValueError(f"cannot sample {k} from buffer of {len(items)}")
    idx = rng.choice(len(items), size=k, replace=False)
    return [items[i] for i in idx]


class RandomReplayBuffer:
    """FIFO ring of the most recent experiences, sampled uniformly."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._data: deque[Experience] = deque(maxlen=capacity)

    def push(self, exp: Experience) -> None:
        self._data.append(exp)

    def sample(self, k: int, rng: np.random.Generator) -> list[Experience]:
        return _sample(self._data, k, rng)

    def __len__(self) -> int:
        return len(self._data)


class ReservoirReplayBuffer:
    """Uniform sample over everything ever pushed (algorithm R).

    Once full, item number N replaces a uniformly random slot with
    probability capacity / N, so each pushed item is retained with equal
    probability regardless of arrival position.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.seen = 0
        self._data: list[Experience] = []

    def push(self, exp: Experience, rng: np.random.Generator) -> None:
        self.seen += 1
        if len(self._data) < self.capacity:
            self._data.append(exp)
            return
        slot = int(rng.integers(0, self.seen))
        if slot < self.capacity:
            self._data[slot] = exp

    def sample(self, k: int, rng: np.random.Generator) -> list[Experience]:
        return _sample(self._data, k, rng)

    def __len__(self) -> int:
        return len(self._data)
