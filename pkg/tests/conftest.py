import functools

from recordbounds.bounds import bound
from recordbounds.distributions import GfrAlpha, RecordIndex

GRID_ALPHAS = (-0.25, 0.0, 0.5, 1.0, 2.0)
GRID = [(a, k, n) for a in GRID_ALPHAS for k in range(1, 5) for n in range(1, 5)]


@functools.lru_cache(maxsize=None)
def cached_bound(alpha, k, n):
    return bound(GfrAlpha(alpha), RecordIndex(k, n))
