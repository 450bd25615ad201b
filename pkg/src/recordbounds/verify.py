"""Independent checks: quadrature norms, projection residuals, Monte Carlo.

Two record samplers are provided.  The gamma representation uses
``R_n^(k) = F^{-1}(1 - exp(-Gamma_{n+1} / k))``; the naive sampler walks an
i.i.d. stream and tracks the running k-th largest value.  They are
cross-checked against each other in the test suite.
"""
from __future__ import annotations

import enum
import heapq
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _quad
from .distributions import GfrAlpha, RecordIndex, DomainError, L_of_x, h_L, x_of_L
from .projection import ProjectionCurve

__all__ = [
    "Sampler",
    "McReport",
    "ResidualReport",
    "ParentModel",
    "UNIFORM",
    "EXPONENTIAL",
    "CostGuardError",
    "quad_norm_sq",
    "inner_product",
    "residual_report",
    "shape_check",
    "attainment_integral",
    "mc_record_mean",
    "naive_record_stream",
    "k_records",
    "worker_count",
]

SHARD = 1 << 18
CONE_TOL = 1e-8


class Sampler(str, enum.Enum):
    GAMMA = "gamma"
    NAIVE = "naive"


class CostGuardError(DomainError):
    """The naive stream sampler refuses (k, n) whose record times explode."""


def worker_count() -> int:
    env = os.environ.get("RECORD_BOUND_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"RECORD_BOUND_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# -- quadrature oracles ----------------------------------------------------------

def quad_norm_sq(curve: ProjectionCurve) -> float:
    """Squared weighted norm of ``curve``, integrated knot by knot."""
    return _quad.integrate_L(lambda t: curve.eval_L(t) ** 2, curve.knots_L)


def inner_product(f_L, g_L, knots_L=()) -> float:
    """<f, g>_w for functions given in the L coordinate."""
    return _quad.integrate_L(lambda t: f_L(t) * g_L(t), knots_L)


@dataclass
class ResidualReport:
    inner_residual: float
    mean_violation: float
    max_cone_inner: float
    cone_violations: list = field(default_factory=list)
    n_generators: int = 0

    def ok(self, inner_tol: float = 1e-6, mean_tol: float = 1e-8, cone_tol: float = CONE_TOL) -> bool:
        return (
            abs(self.inner_residual) < inner_tol
            and self.mean_violation < mean_tol
            and self.max_cone_inner < cone_tol
        )


def residual_report(fam: GfrAlpha, idx: RecordIndex, curve: ProjectionCurve, *, n_grid: int = 16) -> ResidualReport:
    """Projection characterization residuals.

    For a projection onto a convex cone, ``h - Ph`` is orthogonal to ``Ph``
    and has nonpositive inner product with every cone element.  The cone
    of nondecreasing concave functions is generated by ``+-1`` and the
    ramps ``min(x, t)``; ramps are tested at ``u = j / (n_grid + 1)``, at
    the curve knots and at ``t = d`` (the identity).
    """
    a, k, n = fam.alpha, idx.k, idx.n
    knots = curve.knots_L

    def resid(t):
        return h_L(k, n, t) - curve.eval_L(t)

    inner = _quad.integrate_L(lambda t: resid(t) * curve.eval_L(t), knots)
    mean = _quad.integrate_L(curve.eval_L, knots)

    gens = [("+1", None), ("-1", None)]
    ts = [-math.log1p(-j / (n_grid + 1)) for j in range(1, n_grid + 1)]
    ts += list(knots) + [math.inf]
    for tL in ts:
        gens.append((f"min(x, {float(x_of_L(a, tL)):.6g})", tL))

    vals = []
    for label, tL in gens:
        if tL is None:
            sign = 1.0 if label == "+1" else -1.0
            v = sign * _quad.integrate_L(resid, knots)
        elif math.isinf(tL):
            v = _quad.integrate_L(lambda t: resid(t) * x_of_L(a, t), knots)
        else:
            xt = float(x_of_L(a, tL))
            v = _quad.integrate_L(
                lambda t: resid(t) * min(float(x_of_L(a, t)), xt), list(knots) + [tL]
            )
        vals.append((label, v))
    worst = max(v for _, v in vals)
    bad = [(lab, v) for lab, v in vals if v >= CONE_TOL]
    return ResidualReport(inner, abs(mean), worst, bad, len(vals))


def shape_check(curve: ProjectionCurve, npts: int = 2048, *, tol: float = 1e-10) -> tuple[bool, bool]:
    """(nondecreasing, midpoint concave) on a uniform x grid of ``npts`` points."""
    a = curve.fam.alpha
    if a > 0:
        x_hi = 1.0 / a
    else:
        last = max(curve.knots_L, default=0.0)
        x_hi = float(max(x_of_L(a, 25.0), 2.0 * x_of_L(a, last)))
    x = np.linspace(0.0, x_hi, npts)
    with np.errstate(divide="ignore"):
        f = np.asarray(curve.eval_L(L_of_x(a, x)), dtype=float)
    scale = max(1.0, float(np.max(np.abs(f))))
    mono = bool(np.all(np.diff(f) >= -tol * scale))
    conc = bool(np.all(f[:-2] + f[2:] - 2.0 * f[1:-1] <= tol * scale))
    return mono, conc


def attainment_integral(model, idx: RecordIndex) -> float:
    """E[(R_n^(k) - mu) / sigma] under ``model`` by quadrature."""
    k, n = idx.k, idx.n
    knots = getattr(getattr(model, "curve", None), "knots_L", ())
    return _quad.integrate_L(
        lambda t: (model.quantile_L(t) - model.mu) / model.sigma * h_L(k, n, t), knots
    )


# -- Monte Carlo ------------------------------------------------------------------

@dataclass(frozen=True)
class ParentModel:
    """Parent law given by its quantile in the log-survival coordinate."""

    name: str
    mu: float
    sigma: float

    def quantile_L(self, L):
        L = np.asarray(L, dtype=float)
        if self.name == "uniform":
            return -np.expm1(-L)
        if self.name == "exponential":
            return L + 0.0
        raise ValueError(f"unknown parent {self.name!r}")


UNIFORM = ParentModel("uniform", 0.5, 1.0 / math.sqrt(12.0))
EXPONENTIAL = ParentModel("exponential", 1.0, 1.0)


@dataclass(frozen=True)
class McReport:
    estimate: float
    std_error: float
    samples: int
    seed: int
    sampler: Sampler


def _shard_sizes(total: int, shard: int) -> list[int]:
    full, rem = divmod(total, shard)
    return [shard] * full + ([rem] if rem else [])


def _combine(stats) -> tuple[float, float, int]:
    """Merge per-shard (count, mean, M2) in a fixed order."""
    n_tot, mean, m2 = 0, 0.0, 0.0
    for c, m, s in stats:
        if c == 0:
            continue
        delta = m - mean
        new = n_tot + c
        mean += delta * c / new
        m2 += s + delta * delta * n_tot * c / new
        n_tot = new
    return mean, m2, n_tot


def _run_shards(fn, sizes, seed, threads):
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(seqs, sizes))
    workers = min(threads or worker_count(), len(jobs)) or 1
    if workers == 1:
        return [fn(s, c) for s, c in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda job: fn(*job), jobs))


def _report(stats, samples, seed, sampler) -> McReport:
    mean, m2, cnt = _combine(stats)
    var = m2 / (cnt - 1) if cnt > 1 else 0.0
    return McReport(float(mean), math.sqrt(var / cnt), int(samples), int(seed), sampler)


def mc_record_mean(model, idx: RecordIndex, samples: int, seed: int, *, threads: int | None = None) -> McReport:
    """Standardized mean of R_n^(k) under ``model`` via the gamma representation.

    ``model`` needs ``quantile_L``, ``mu`` and ``sigma`` (a
    :class:`~recordbounds.bounds.QuantileModel` or :class:`ParentModel`).
    Shards of fixed size draw from spawned seed sequences, so the result
    does not depend on the number of threads.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    k, n = idx.k, idx.n

    def shard(ss, size):
        rng = np.random.Generator(np.random.PCG64(ss))
        L = rng.standard_gamma(n + 1, size) / k
        v = (np.asarray(model.quantile_L(L), dtype=float) - model.mu) / model.sigma
        m = float(v.mean())
        return size, m, float(((v - m) ** 2).sum())

    stats = _run_shards(shard, _shard_sizes(samples, SHARD), seed, threads)
    return _report(stats, samples, seed, Sampler.GAMMA)


def k_records(stream, k: int, n: int | None = None) -> list:
    """Values R_0, R_1, ... of the k-th record sequence of a finite stream.

    R_0 is the k-th largest of the first k observations; each later
    observation exceeding the current k-th largest is a record, and the
    new k-th largest is the record value.
    """
    stream = list(stream)
    if len(stream) < k:
        return []
    heap = list(stream[:k])
    heapq.heapify(heap)
    out = [heap[0]]
    for v in stream[k:]:
        if n is not None and len(out) > n:
            break
        if v > heap[0]:
            heapq.heapreplace(heap, v)
            out.append(heap[0])
    return out if n is None else out[: n + 1]


def _naive_one(rng, k, n):
    # Records of an exponential stream; any parent is a monotone image.
    chunk = 64
    buf = rng.standard_exponential(max(chunk, k))
    heap = [float(v) for v in buf[:k]]
    heapq.heapify(heap)
    pos, found = k, 0
    while found < n:
        if pos >= buf.size:
            chunk = min(chunk * 2, 1 << 20)
            buf = rng.standard_exponential(chunk)
            pos = 0
        hit = np.flatnonzero(buf[pos:] > heap[0])
        if hit.size == 0:
            pos = buf.size
            continue
        j = pos + int(hit[0])
        heapq.heapreplace(heap, float(buf[j]))
        pos = j + 1
        found += 1
    return heap[0]


def naive_record_stream(
    idx: RecordIndex, parent, replications: int, seed: int, *, threads: int | None = None, shard: int = 4096,
) -> McReport:
    """Standardized mean of R_n^(k) by simulating i.i.d. streams directly."""
    k, n = idx.k, idx.n
    if k > 4 or n > 3:
        raise CostGuardError(
            f"naive stream sampler limited to k <= 4 and n <= 3 (got k={k}, n={n}); "
            "record times grow too fast beyond that, use the gamma sampler"
        )
    if replications < 1:
        raise DomainError("replications must be >= 1")

    def run(ss, size):
        rng = np.random.Generator(np.random.PCG64(ss))
        L = np.array([_naive_one(rng, k, n) for _ in range(size)])
        v = (np.asarray(parent.quantile_L(L), dtype=float) - parent.mu) / parent.sigma
        m = float(v.mean())
        return size, m, float(((v - m) ** 2).sum())

    stats = _run_shards(run, _shard_sizes(replications, shard), seed, threads)
    return _report(stats, replications, seed, Sampler.NAIVE)
