"""Reference implementations that the library is checked against."""

import itertools
from functools import lru_cache

import mpmath
import numpy as np

ALPHABET = (0.0, 0.5, 1.0)


def all_vectors(n: int, alphabet=ALPHABET) -> np.ndarray:
    return np.array(list(itertools.product(alphabet, repeat=n)), dtype=np.float64).reshape(-1, n)


@lru_cache(maxsize=None)
def warping_paths(n: int, m: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Every monotone (0,0)->(n-1,m-1) path with steps down, right and diagonal."""
    if n == 1 and m == 1:
        return (((0, 0),),)
    out = []
    for di, dj in ((1, 0), (0, 1), (1, 1)):
        if n - di >= 1 and m - dj >= 1:
            out.extend(p + ((n - 1, m - 1),) for p in warping_paths(n - di, m - dj))
    return tuple(out)


def path_dtw(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return min(sum((a[i] - b[j]) ** 2 for i, j in p) for p in warping_paths(len(a), len(b)))


def path_dtw_all(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Minimum over explicit warping paths for every pair of rows of ``A`` and ``B``."""
    n, m = A.shape[1], B.shape[1]
    C = (A[:, None, :, None] - B[None, :, None, :]) ** 2
    best = np.full((len(A), len(B)), np.inf)
    for p in warping_paths(n, m):
        ii, jj = zip(*p)
        best = np.minimum(best, C[:, :, ii, jj].sum(axis=2))
    return best


def recursive_dtw_all(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """D(i,j) = c(i,j) + min(D(i-1,j), D(i,j-1), D(i-1,j-1)), vectorized over all pairs."""
    n, m = A.shape[1], B.shape[1]
    prev = None
    for i in range(n):
        cur = []
        for j in range(m):
            c = (A[:, i, None] - B[None, :, j]) ** 2
            if i == 0 and j == 0:
                best = 0.0
            elif i == 0:
                best = cur[j - 1]
            elif j == 0:
                best = prev[0]
            else:
                best = np.minimum(np.minimum(prev[j], prev[j - 1]), cur[j - 1])
            cur.append(c + best)
        prev = cur
    return prev[m - 1]


def quantile_linear(values, q: float) -> float:
    """Order-statistic interpolation: position q*(n-1) in the sorted sample."""
    s = sorted(values)
    pos = q * (len(s) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


def t_two_tailed_by_integration(t: float, df: int) -> float:
    """2 * integral of the Student-t density from |t| to infinity, in 40-digit arithmetic."""
    with mpmath.workdps(40):
        nu = mpmath.mpf(df)
        c = mpmath.gamma((nu + 1) / 2) / (mpmath.sqrt(nu * mpmath.pi) * mpmath.gamma(nu / 2))
        pdf = lambda x: c * (1 + x * x / nu) ** (-(nu + 1) / 2)  # noqa: E731
        return float(2 * mpmath.quad(pdf, [abs(t), mpmath.inf]))
