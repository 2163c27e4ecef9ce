"""Random block-Bernoulli masks.

Each dimension is cut into cells of ``cell_width`` consecutive time steps (the
last cell takes the remainder) and every cell is kept independently with
probability ``p``. Masks are stored as ``uint8`` arrays of shape ``(N, V, T)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ENUMERATED_CELLS = 20


@dataclass(frozen=True)
class MaskDistribution:
    p: float = 0.5
    cell_width: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"keep probability must lie in (0, 1), got {self.p}")
        if int(self.cell_width) != self.cell_width or self.cell_width < 1:
            raise ValueError(f"cell width must be a positive integer, got {self.cell_width}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @classmethod
    def default_for(cls, T: int, seed: int = 0) -> "MaskDistribution":
        return cls(p=0.5, cell_width=max(1, T // 8), seed=seed)

    def n_cells(self, T: int) -> int:
        return -(-T // self.cell_width)

    def check_shape(self, shape) -> tuple[int, int]:
        V, T = (int(s) for s in shape)
        if V < 1 or T < 1:
            raise ValueError(f"invalid series shape {shape}")
        if self.cell_width > T:
            raise ValueError(f"cell width {self.cell_width} exceeds series length {T}")
        return V, T

    def expand(self, cells: np.ndarray, T: int) -> np.ndarray:
        """Broadcast cell bits ``(..., V, C)`` to time steps ``(..., V, T)``."""
        return np.repeat(cells, self.cell_width, axis=-1)[..., :T]


@dataclass(frozen=True, eq=False)
class MaskSet:
    bits: np.ndarray
    distribution: MaskDistribution
    # P(M = m) for each mask; only set for full enumerations
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.bits.ndim != 3 or self.bits.shape[0] < 1:
            raise ValueError(f"mask set must be a non-empty (N, V, T) array, got {self.bits.shape}")
        self.bits.setflags(write=False)

    def __len__(self) -> int:
        return self.bits.shape[0]

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i) -> np.ndarray:
        return self.bits[i]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape[1], self.bits.shape[2]


def _mask_rng(seed: int, index: int) -> np.random.Generator:
    # per-mask stream: generation order and worker count cannot change the bits
    return np.random.default_rng([int(seed), int(index)])


def generate_masks(dist: MaskDistribution, shape, count: int) -> MaskSet:
    if count < 1:
        raise ValueError(f"mask count must be >= 1, got {count}")
    V, T = dist.check_shape(shape)
    C = dist.n_cells(T)
    cells = np.empty((count, V, C), dtype=np.uint8)
    for i in range(count):
        cells[i] = _mask_rng(dist.seed, i).random((V, C)) < dist.p
    return MaskSet(dist.expand(cells, T), dist)


def apply_mask(series: np.ndarray, mask: np.ndarray) -> np.ndarray:
    series = np.asarray(series, dtype=np.float64)
    mask = np.asarray(mask)
    if series.shape != mask.shape:
        raise ValueError(f"mask shape {mask.shape} does not match series shape {series.shape}")
    return series * mask


def enumerate_all_masks(dist: MaskDistribution, shape) -> MaskSet:
    """Every cell assignment with its probability ``p^k (1-p)^(V*C-k)``."""
    V, T = dist.check_shape(shape)
    C = dist.n_cells(T)
    n = V * C
    if n > MAX_ENUMERATED_CELLS:
        raise ValueError(
            f"enumeration needs 2^{n} = {2**n} masks for {V}x{C} cells; "
            f"limit is 2^{MAX_ENUMERATED_CELLS}"
        )
    codes = np.arange(2**n, dtype=np.int64)
    cells = ((codes[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    kept = cells.sum(axis=1)
    weights = dist.p**kept * (1.0 - dist.p) ** (n - kept)
    bits = dist.expand(cells.reshape(-1, V, C), T)
    return MaskSet(bits, dist, weights)
