"""Probability oracles: the classifiers whose decisions get explained.

An oracle maps a batch of ``(V, T)`` series to rows of class probabilities
ordered by its sorted ``labels``. Two built-in oracles stand in for real
black boxes; :class:`SubprocessOracle` bridges to any external model.
"""

from __future__ import annotations

import shlex
import subprocess
import threading
from abc import ABC, abstractmethod
from typing import Callable, Sequence

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from mimicshape import _dtw
from mimicshape.tsdata import LabeledDataset


class OracleError(RuntimeError):
    """An oracle broke its contract or could not be reached."""


def check_distribution(P: np.ndarray, n_labels: int, offset: int = 0, atol: float = 1e-9) -> np.ndarray:
    """Validate rows of class probabilities; ``offset`` is added to reported row indices."""
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != n_labels:
        raise OracleError(f"oracle returned shape {P.shape}, expected (*, {n_labels})")
    bad = ~np.isfinite(P).all(axis=1) | (P < 0).any(axis=1) | (P > 1 + atol).any(axis=1)
    bad |= np.abs(P.sum(axis=1) - 1.0) > atol
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise OracleError(f"invalid distribution at probe {offset + i}: {P[i].tolist()}")
    return P


class ProbabilityOracle(ABC):
    """Anything that turns series into class distributions.

    Subclasses implement :meth:`predict_proba_batch`. ``concurrent`` says whether
    read-only calls from several threads at once are safe.
    """

    labels: tuple[str, ...]
    shape: tuple[int, int] | None = None
    concurrent: bool = True

    @abstractmethod
    def predict_proba_batch(self, X: np.ndarray) -> np.ndarray:
        """``(B, V, T)`` -> ``(B, len(labels))``."""

    def _check_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3:
            raise ValueError(f"expected a (B, V, T) batch, got shape {X.shape}")
        if self.shape is not None and tuple(X.shape[1:]) != tuple(self.shape):
            raise ValueError(f"series shape {X.shape[1:]} does not match oracle shape {self.shape}")
        return X

    def predict_proba(self, series) -> np.ndarray:
        series = np.asarray(series, dtype=np.float64)
        if series.ndim != 2:
            raise ValueError(f"expected a (V, T) series, got shape {series.shape}")
        return self.predict_proba_batch(series[None])[0]

    def predict(self, X) -> list[str]:
        P = self.predict_proba_batch(X)
        return [self.labels[i] for i in P.argmax(axis=1)]

    def close(self) -> None:
        pass


class CallableOracle(ProbabilityOracle):
    """Wrap a plain function ``(B, V, T) -> (B, L)``."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], labels: Sequence[str], shape=None, concurrent=True):
        self.fn = fn
        self.labels = tuple(labels)
        self.shape = tuple(shape) if shape is not None else None
        self.concurrent = concurrent

    def predict_proba_batch(self, X):
        X = self._check_batch(X)
        return np.asarray(self.fn(X), dtype=np.float64)


def _band(band) -> int:
    return -1 if band is None else int(band)


class OneNnDtwOracle(ProbabilityOracle):
    """Nearest-neighbour DTW with a per-class softmin over distances.

    ``P(c | x) ∝ exp(-d_c(x) / theta)`` with ``d_c`` the smallest dependent
    multivariate DTW cost from ``x`` to a training series of class ``c``.
    """

    def __init__(self, X: np.ndarray, y: Sequence[str], band: int | None, theta: float, labels=None):
        if theta <= 0:
            raise ValueError(f"temperature must be positive, got {theta}")
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.labels = tuple(sorted(set(y))) if labels is None else tuple(labels)
        index = {lab: i for i, lab in enumerate(self.labels)}
        self.ref_class = np.asarray([index[lab] for lab in y], dtype=np.int64)
        missing = set(self.labels) - set(y)
        if missing:
            raise ValueError(f"classes without training instances: {sorted(missing)}")
        self.band = band
        self.theta = float(theta)
        self.shape = self.X.shape[1:]
        if band is not None:
            self._upper, self._lower = _dtw.envelopes(self.X, int(band))
        else:
            self._upper = self._lower = np.empty((0, 1, 1))

    def class_distances(self, X) -> np.ndarray:
        X = np.ascontiguousarray(self._check_batch(X))
        return _dtw.class_min_dtw(
            X, self.X, self.ref_class, len(self.labels), _band(self.band), self._upper, self._lower
        )

    def predict_proba_batch(self, X):
        d = self.class_distances(X)
        z = -(d - d.min(axis=1, keepdims=True)) / self.theta
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)


def median_pairwise_dtw(X: np.ndarray, band: int | None) -> float:
    n = X.shape[0]
    if n < 2:
        return 1.0
    D = _dtw.pairwise_dtw(np.ascontiguousarray(X, dtype=np.float64), _band(band))
    med = float(np.median(D[np.triu_indices(n, 1)]))
    return med if med > 0 else 1.0


def fit_1nn_dtw(train: LabeledDataset, band: int | None = None, theta: float | None = None) -> OneNnDtwOracle:
    """Build a 1NN-DTW oracle; ``theta`` defaults to the median pairwise training DTW cost."""
    if len(train) == 0:
        raise ValueError("empty training set")
    if theta is None:
        theta = median_pairwise_dtw(train.X, band)
    return OneNnDtwOracle(train.X, train.labels, band, theta, labels=train.label_set)


def interval_features(X: np.ndarray, intervals: np.ndarray) -> np.ndarray:
    """Mean, standard deviation and least-squares slope of each ``(dim, start, stop)`` interval."""
    feats = np.empty((X.shape[0], 3 * len(intervals)))
    for k, (dim, start, stop) in enumerate(intervals):
        seg = X[:, dim, start:stop]
        n = stop - start
        mean = seg.mean(axis=1)
        feats[:, 3 * k] = mean
        feats[:, 3 * k + 1] = seg.std(axis=1)
        if n > 1:
            t = np.arange(n) - (n - 1) / 2.0
            feats[:, 3 * k + 2] = (seg - mean[:, None]) @ t / (t @ t)
        else:
            feats[:, 3 * k + 2] = 0.0
    return feats


class IntervalForestOracle(ProbabilityOracle):
    """Random-interval forest; probabilities are the fraction of trees voting for each class."""

    def __init__(self, trees: list, intervals: list[np.ndarray], labels, shape):
        self.trees = trees
        self.intervals = intervals
        self.labels = tuple(labels)
        self.shape = tuple(shape)

    def predict_proba_batch(self, X):
        X = self._check_batch(X)
        votes = np.zeros((X.shape[0], len(self.labels)))
        rows = np.arange(X.shape[0])
        for tree, iv in zip(self.trees, self.intervals):
            pred = tree.predict(interval_features(X, iv)).astype(np.intp)
            votes[rows, pred] += 1.0
        return votes / len(self.trees)


def fit_interval_forest(
    train: LabeledDataset, trees: int = 100, intervals: int | None = None, seed: int = 0, min_length: int = 3
) -> IntervalForestOracle:
    if len(train) == 0:
        raise ValueError("empty training set")
    if trees < 1:
        raise ValueError(f"tree count must be >= 1, got {trees}")
    V, T = train.shape
    if intervals is None:
        intervals = max(1, int(np.sqrt(T)))
    min_length = min(min_length, T)
    labels = train.label_set
    index = {lab: i for i, lab in enumerate(labels)}
    y = np.asarray([index[lab] for lab in train.labels])
    rng = np.random.default_rng(seed)
    fitted, all_iv = [], []
    for _ in range(trees):
        dims = rng.integers(0, V, size=intervals)
        lengths = rng.integers(min_length, T + 1, size=intervals)
        starts = np.array([rng.integers(0, T - n + 1) for n in lengths])
        iv = np.stack([dims, starts, starts + lengths], axis=1)
        tree = DecisionTreeClassifier(random_state=int(rng.integers(2**31)))
        tree.fit(interval_features(train.X, iv), y)
        fitted.append(tree)
        all_iv.append(iv)
    return IntervalForestOracle(fitted, all_iv, labels, (V, T))


class SubprocessOracle(ProbabilityOracle):
    """Talk to an external model over a line protocol on its stdin/stdout.

    Handshake ``HELLO mimic-oracle 1`` -> ``OK <num_labels>``; each query is
    ``PREDICT`` followed by V lines of T floats, answered by one line of
    probabilities in sorted label order.
    """

    concurrent = False

    def __init__(self, command: str | Sequence[str], labels: Sequence[str], shape, timeout: float = 60.0):
        self.labels = tuple(sorted(labels))
        self.shape = tuple(shape)
        self.command = command
        args = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self.proc = subprocess.Popen(
                args, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, encoding="utf-8", bufsize=1
            )
        except OSError as exc:
            raise OracleError(f"cannot start oracle {command!r}: {exc}") from exc
        self._lock = threading.Lock()
        reply = self._exchange("HELLO mimic-oracle 1\n")
        toks = reply.split()
        if len(toks) != 2 or toks[0] != "OK":
            self.close()
            raise OracleError(f"oracle handshake failed: {reply!r}")
        if toks[1] != str(len(self.labels)):
            self.close()
            raise OracleError(f"oracle reports {toks[1]} labels, dataset has {len(self.labels)}")

    def _exchange(self, message: str) -> str:
        try:
            self.proc.stdin.write(message)
            self.proc.stdin.flush()
            line = self.proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise OracleError(f"oracle process failed: {exc}") from exc
        if not line:
            raise OracleError(f"oracle process closed its output (exit code {self.proc.poll()})")
        return line.strip()

    def predict_proba_batch(self, X):
        X = self._check_batch(X)
        out = np.empty((X.shape[0], len(self.labels)))
        with self._lock:
            for b, x in enumerate(X):
                body = "\n".join(" ".join("%.17g" % v for v in row) for row in x)
                reply = self._exchange("PREDICT\n" + body + "\n")
                try:
                    vals = [float(t) for t in reply.split()]
                except ValueError:
                    raise OracleError(f"unparseable oracle reply: {reply!r}") from None
                if len(vals) != len(self.labels):
                    raise OracleError(f"oracle returned {len(vals)} probabilities, expected {len(self.labels)}")
                out[b] = vals
        return out

    def close(self):
        proc = getattr(self, "proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
            proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def __del__(self):
        self.close()
