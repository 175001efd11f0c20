from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRAIN_FRACTION = 0.6
VAL_FRACTION = 0.1


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.val), len(self.test)

    def subset(self, name: str) -> tuple[int, ...]:
        if name == "all":
            return tuple(sorted(self.train + self.val + self.test))
        return getattr(self, name)


def split_dataset(n: int, seed: int) -> DatasetSplit:
    """60/10/30 split of ``range(n)``; train and val sizes are floored, test takes the rest."""
    if n < 10:
        raise ValueError(f"need at least 10 records to split, got {n}")
    # integer arithmetic avoids 0.6 * n rounding surprises
    n_train = (6 * n) // 10
    n_val = n // 10
    perm = np.random.default_rng(seed).permutation(n)
    train = tuple(sorted(int(i) for i in perm[:n_train]))
    val = tuple(sorted(int(i) for i in perm[n_train:n_train + n_val]))
    test = tuple(sorted(int(i) for i in perm[n_train + n_val:]))
    return DatasetSplit(train, val, test)
