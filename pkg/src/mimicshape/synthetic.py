"""Planted-motif datasets with known ground truth.

Every dimension follows a shared smooth baseline (a slow sinusoid whose phase
depends on the dimension) plus Gaussian noise. Instances of class ``c``
replace the baseline with a class-specific motif in dimension ``c mod V``,
centred on that dimension's baseline trough and shifted by a small random
jitter. Motifs stay in the baseline's [-1, 1] range, so per-row normalization
treats all classes alike, and they rise above the trough they replace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mimicshape.tsdata import LabeledDataset


def motif_shape(c: int, length: int) -> np.ndarray:
    """Bumps rising from -1 to 1 and back; 1, 2 or 3 of them depending on ``c``."""
    t = np.linspace(0.0, 1.0, length)
    bumps = c % 3 + 1
    return -np.cos(2.0 * np.pi * bumps * t)


def baseline(V: int, T: int) -> np.ndarray:
    t = np.arange(T) / T
    phase = np.arange(V)[:, None] * (2.0 * np.pi / max(V, 1))
    return np.sin(2.0 * np.pi * t[None, :] + phase)


@dataclass(frozen=True)
class PlantedMotif:
    label: str
    dim: int
    start: int
    length: int
    values: np.ndarray

    def region(self, jitter: int, T: int) -> tuple[int, int]:
        return max(0, self.start - jitter), min(T, self.start + self.length + jitter)


def motif_layout(n_classes: int, V: int, T: int, motif_length: int) -> list[PlantedMotif]:
    out = []
    for c in range(n_classes):
        dim = c % V
        # trough of sin(2 pi t + phase) at t = 3/4 - phase / (2 pi); later rounds shift by T/4
        centre = (0.75 - dim / V + (c // V) * 0.25) % 1.0 * T
        start = int(round(centre - motif_length / 2))
        start = min(max(start, 0), T - motif_length)
        out.append(PlantedMotif(f"c{c}", dim, start, motif_length, motif_shape(c, motif_length)))
    return out


def planted_motif_dataset(
    n_instances: int = 200,
    V: int = 3,
    T: int = 100,
    motif_length: int = 20,
    noise: float = 0.1,
    n_classes: int = 2,
    jitter: int = 5,
    seed: int = 0,
) -> tuple[LabeledDataset, list[PlantedMotif]]:
    if motif_length > T:
        raise ValueError(f"motif length {motif_length} exceeds series length {T}")
    if n_classes < 1 or n_instances < n_classes:
        raise ValueError("need at least one instance per class")
    rng = np.random.default_rng(seed)
    motifs = motif_layout(n_classes, V, T, motif_length)
    y = np.arange(n_instances) % n_classes
    rng.shuffle(y)
    X = np.repeat(baseline(V, T)[None], n_instances, axis=0)
    for i, c in enumerate(y):
        m = motifs[c]
        shift = int(rng.integers(-jitter, jitter + 1)) if jitter else 0
        s = min(max(m.start + shift, 0), T - m.length)
        X[i, m.dim, s:s + m.length] = m.values
    X += noise * rng.standard_normal(X.shape)
    labels = tuple(motifs[c].label for c in y)
    return LabeledDataset(X, labels, name="planted"), motifs
