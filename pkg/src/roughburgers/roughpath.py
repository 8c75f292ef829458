"""Rough paths sampled on grids.

A rough path is represented by the group-like tensors X_{0,t_i} at the grid
times; increments X_{s,t} are always derived through Chen's relation
X_{s,t} = X_{0,s}^{-1} (x) X_{0,t} and never stored pairwise.  Levels are kept
as stacked arrays of shape (n_times, d**k), which lets lifts, increment
extraction and the grid Hoelder norms run as whole-array numpy operations.

The grid Hoelder seminorm is the sup over grid pairs only; it lower-bounds
the continuum seminorm, and subsampling stability is the practical check for
whether it has saturated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement, product

import numpy as np

from .algebra import MAX_DEPTH, MAX_DIM, TruncatedTensor, _shuffle_scatter

__all__ = [
    "GridPath",
    "RoughPathGrid",
    "HoelderReport",
    "ChenReport",
    "ShuffleReport",
    "signature_lift",
    "signature_lift_batch",
    "increment",
    "check_chen",
    "check_shuffle",
    "hoelder_norm",
    "brownian_gridpath",
]

CHEN_SAMPLE_THRESHOLD = 128
CHEN_SAMPLE_COUNT = 10_000


@dataclass(frozen=True)
class GridPath:
    """An R^d-valued path sampled at strictly increasing times."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or values.shape[0] != times.shape[0]:
            raise ValueError("times and values must have matching leading length")
        if times.size >= 2 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        if times.size and times[0] < 0:
            raise ValueError("first time must be >= 0")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.times.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x{i + 1}" for i in range(self.dim)])
            for t, row in zip(self.times, self.values):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "GridPath":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[0] != "t":
                raise ValueError("grid path CSV must start with a 't' column")
            rows = [[float(v) for v in row] for row in reader if row]
        arr = np.asarray(rows)
        return cls(arr[:, 0], arr[:, 1:])


@dataclass(frozen=True)
class HoelderReport:
    """Per-level grid Hoelder seminorms ||X^i||_{i*alpha} and their sum."""

    alpha: float
    per_level_norms: np.ndarray
    total: float


@dataclass(frozen=True)
class ChenReport:
    ok: bool
    max_violation: float
    triples_checked: int
    tol: float


@dataclass(frozen=True)
class ShuffleReport:
    ok: bool
    max_violation: float
    pairs_checked: int
    tol: float


class RoughPathGrid:
    """Group-like tensors X_{0,t_i} on a grid, with stacked level arrays."""

    def __init__(self, times, levels, alpha, dim=None, base=None, validate=True):
        times = np.asarray(times, dtype=float)
        levels = [np.asarray(l, dtype=float) for l in levels]
        self.times = times
        self.levels = levels
        self.alpha = float(alpha)
        self.depth = len(levels) - 1
        self.dim = int(dim) if dim is not None else _infer_dim(levels)
        self.base = (
            np.zeros(self.dim) if base is None else np.asarray(base, dtype=float).ravel()
        )
        if validate:
            self._validate()
        for arr in self.levels:
            arr.setflags(write=False)
        self.times.setflags(write=False)
        self.base.setflags(write=False)

    def _validate(self):
        n = self.times.size
        if not 1 <= self.dim <= MAX_DIM:
            raise ValueError(f"dim must be in 1..{MAX_DIM}")
        if not 1 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must be in 1..{MAX_DEPTH}")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        for k, lvl in enumerate(self.levels):
            if lvl.shape != (n, self.dim**k):
                raise ValueError(
                    f"level {k} has shape {lvl.shape}, expected {(n, self.dim ** k)}"
                )
        if not np.allclose(self.levels[0], 1.0, atol=1e-12):
            raise ValueError("level 0 must be identically 1 (group-like)")
        first = [lvl[0] for lvl in self.levels[1:]]
        if any(np.max(np.abs(f)) > 1e-12 for f in first):
            raise ValueError("X_{0,0} must be the unit tensor")

    def __len__(self) -> int:
        return self.times.size

    def group_elem(self, i: int) -> TruncatedTensor:
        """X_{0,t_i} as a TruncatedTensor."""
        return TruncatedTensor(
            self.dim, self.depth, tuple(lvl[i] for lvl in self.levels)
        )

    def inverse_levels(self) -> list[np.ndarray]:
        """Stacked levels of X_{0,t_i}^{-1} for every grid point (cached)."""
        if not hasattr(self, "_inv_levels"):
            self._inv_levels = _batch_inverse(self.levels, self.dim)
        return self._inv_levels

    def increment_levels(self, i, j) -> list[np.ndarray]:
        """Stacked levels of X_{t_i, t_j} for index arrays i, j (broadcast)."""
        i = np.atleast_1d(np.asarray(i, dtype=int))
        j = np.atleast_1d(np.asarray(j, dtype=int))
        inv = self.inverse_levels()
        a = [lvl[i] for lvl in inv]
        b = [lvl[j] for lvl in self.levels]
        return _batch_mul(a, b, self.dim)

    def onestep_increment_levels(self) -> list[np.ndarray]:
        """Levels of the consecutive increments X_{t_i, t_{i+1}} (cached)."""
        if not hasattr(self, "_onestep"):
            n = len(self)
            self._onestep = self.increment_levels(
                np.arange(n - 1), np.arange(1, n)
            )
        return self._onestep

    def subsample(self, step: int) -> "RoughPathGrid":
        """Restriction to every step-th grid point (endpoint kept)."""
        idx = np.arange(0, len(self), step)
        if idx[-1] != len(self) - 1:
            idx = np.append(idx, len(self) - 1)
        return RoughPathGrid(
            self.times[idx],
            [lvl[idx] for lvl in self.levels],
            self.alpha,
            dim=self.dim,
            base=self.base,
            validate=False,
        )


def _infer_dim(levels) -> int:
    if len(levels) < 2:
        raise ValueError("need at least level 1 to infer the dimension")
    return levels[1].shape[1]


def _batch_mul(a: list[np.ndarray], b: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Graded truncated product of stacked tensors (leading axis broadcast)."""
    depth = len(a) - 1
    n = np.broadcast_shapes(a[0].shape[:-1], b[0].shape[:-1])
    out = []
    for r in range(depth + 1):
        acc = np.zeros(n + (dim**r,))
        for p in range(r + 1):
            q = r - p
            term = a[p][..., :, None] * b[q][..., None, :]
            acc += term.reshape(term.shape[:-2] + (dim**r,))
        out.append(acc)
    return out


def _batch_inverse(levels: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Neumann-series inverse of stacked group-like tensors."""
    depth = len(levels) - 1
    lead = levels[0].shape[:-1]
    nil = [np.zeros(lead + (1,))] + [lvl.copy() for lvl in levels[1:]]
    result = [np.ones(lead + (1,))] + [
        np.zeros(lead + (dim**k,)) for k in range(1, depth + 1)
    ]
    power = [lvl.copy() for lvl in result]
    sign = 1.0
    for _ in range(depth):
        power = _batch_mul(power, nil, dim)
        sign = -sign
        for k in range(depth + 1):
            result[k] = result[k] + sign * power[k]
    return result


def _lift_levels(values: np.ndarray, depth: int) -> list[np.ndarray]:
    """Levels of the signature lift of piecewise-linear paths.

    values has shape (..., n, d).  Uses the step recursion
    X^r_{0,i+1} = sum_q X^{r-q}_{0,i} (x) Delta_i^{(x)q} / q!, which turns the
    cumulative tensor product of segment exponentials into one cumulative sum
    per level.
    """
    values = np.asarray(values, dtype=float)
    d = values.shape[-1]
    n = values.shape[-2]
    lead = values.shape[:-2]
    inc = values[..., 1:, :] - values[..., :-1, :]
    incpow = {1: inc}
    for q in range(2, depth + 1):
        prev = incpow[q - 1]
        term = prev[..., :, None] * inc[..., None, :]
        incpow[q] = term.reshape(lead + (n - 1, d**q)) / q
    levels = [np.ones(lead + (n, 1))]
    for r in range(1, depth + 1):
        terms = np.zeros(lead + (n - 1, d**r))
        for q in range(1, r + 1):
            head = levels[r - q][..., :-1, :]
            term = head[..., :, None] * incpow[q][..., None, :]
            terms += term.reshape(lead + (n - 1, d**r))
        lvl = np.zeros(lead + (n, d**r))
        lvl[..., 1:, :] = np.cumsum(terms, axis=-2)
        levels.append(lvl)
    return levels


def signature_lift(path: GridPath, alpha: float, depth: int | None = None) -> RoughPathGrid:
    """Lift a piecewise-linear path to its step-signature rough path.

    X_{0,t_i} is the tensor product of the segment exponentials, so Chen's
    relation and the shuffle relation hold up to roundoff by construction.
    The default depth is floor(1/alpha).
    """
    if len(path) < 2:
        raise ValueError("need at least two grid points to lift")
    if depth is None:
        depth = int(math.floor(1.0 / alpha))
    levels = _lift_levels(path.values, depth)
    return RoughPathGrid(path.times, levels, alpha, dim=path.dim, base=path.values[0])


def signature_lift_batch(
    times: np.ndarray, values: np.ndarray, alpha: float, depth: int
) -> list[RoughPathGrid]:
    """Lift a batch of paths sharing one time grid; values is (B, n, d)."""
    levels = _lift_levels(values, depth)
    return [
        RoughPathGrid(
            times, [lvl[b] for lvl in levels], alpha, dim=values.shape[-1],
            base=values[b, 0], validate=False,
        )
        for b in range(values.shape[0])
    ]


def increment(X: RoughPathGrid, i: int, j: int) -> TruncatedTensor:
    """X_{t_i,t_j} via Chen's relation."""
    n = len(X)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"grid indices ({i}, {j}) out of range for {n} points")
    if i > j:
        raise ValueError("need i <= j")
    levels = X.increment_levels(np.array([i]), np.array([j]))
    return TruncatedTensor(X.dim, X.depth, tuple(lvl[0] for lvl in levels))


def _relative_scale(levels: list[np.ndarray]) -> float:
    return max(1.0, max(float(np.max(np.abs(l))) for l in levels))


def check_chen(
    X: RoughPathGrid, tol: float = 1e-12, rng_seed: int = 0
) -> ChenReport:
    """Verify X_{s,u} (x) X_{u,t} = X_{s,t} over grid triples.

    All triples are checked for grids up to 128 points; larger grids use
    10^4 seeded random triples.  Violations are relative to the largest
    participating entry (with floor 1).
    """
    n = len(X)
    if n < 3:
        return ChenReport(True, 0.0, 0, tol)
    if n <= CHEN_SAMPLE_THRESHOLD:
        trip = np.array(
            [(s, u, t) for s in range(n) for u in range(s, n) for t in range(u, n)],
            dtype=int,
        )
    else:
        rng = np.random.default_rng(rng_seed)
        raw = rng.integers(0, n, size=(CHEN_SAMPLE_COUNT, 3))
        trip = np.sort(raw, axis=1)
    s, u, t = trip[:, 0], trip[:, 1], trip[:, 2]
    left = _batch_mul(X.increment_levels(s, u), X.increment_levels(u, t), X.dim)
    right = X.increment_levels(s, t)
    scale = max(_relative_scale(left), _relative_scale(right))
    worst = max(
        float(np.max(np.abs(a - b))) for a, b in zip(left, right)
    ) / scale
    return ChenReport(worst < tol, worst, trip.shape[0], tol)


def _word_pairs(dim: int, depth: int):
    for a in range(1, depth):
        for b in range(1, depth + 1 - a):
            yield a, b


def check_shuffle(
    X: RoughPathGrid,
    tol: float = 1e-12,
    samples: int = 200,
    rng_seed: int = 0,
) -> ShuffleReport:
    """Check <X_{s,t}, w1 sh w2> = <X_{s,t}, w1><X_{s,t}, w2> on sampled pairs.

    All word pairs with |w1| + |w2| <= depth are tested for each sampled
    increment; the increments are sampled grid pairs (all pairs if few).
    """
    n = len(X)
    if n < 2 or X.depth < 2:
        return ShuffleReport(True, 0.0, 0, tol)
    pairs = [(s, t) for s in range(n) for t in range(s + 1, n)]
    if len(pairs) > samples:
        rng = np.random.default_rng(rng_seed)
        pairs = [pairs[k] for k in rng.choice(len(pairs), size=samples, replace=False)]
    idx = np.array(pairs, dtype=int)
    inc = X.increment_levels(idx[:, 0], idx[:, 1])
    scale = _relative_scale(inc)
    worst = 0.0
    checked = 0
    for a, b in _word_pairs(X.dim, X.depth):
        ca, cb = _shuffle_scatter(X.dim, a, b)
        # <X, w1 sh w2> for all (w1, w2) at once: gather the level a+b entries.
        lev = inc[a + b]
        gathered = np.zeros((idx.shape[0], X.dim**a, X.dim**b))
        for k in range(ca.shape[0]):
            flat = ca[k][:, None] + cb[k][None, :]
            gathered += lev[:, flat]
        prods = inc[a][:, :, None] * inc[b][:, None, :]
        worst = max(worst, float(np.max(np.abs(gathered - prods))) / scale)
        checked += idx.shape[0] * ca.shape[1] * cb.shape[1]
    return ShuffleReport(worst < tol, worst, checked, tol)


def hoelder_norm(X: RoughPathGrid) -> HoelderReport:
    """Grid-pair Hoelder report: per level sup |X^i_{s,t}| / |t-s|^{i*alpha}."""
    n = len(X)
    if n < 2:
        raise ValueError("need at least two grid points")
    inv = X.inverse_levels()
    per_level = np.zeros(X.depth)
    for s in range(n - 1):
        dt = X.times[s + 1 :] - X.times[s]
        for k in range(1, X.depth + 1):
            acc = np.zeros((n - 1 - s, X.dim**k))
            for p in range(k + 1):
                q = k - p
                term = inv[p][s][None, :, None] * X.levels[q][s + 1 :, None, :]
                acc += term.reshape(n - 1 - s, X.dim**k)
            norms = np.sqrt(np.sum(acc * acc, axis=1))
            ratio = norms / dt ** (k * X.alpha)
            per_level[k - 1] = max(per_level[k - 1], float(np.max(ratio)))
    return HoelderReport(X.alpha, per_level, float(np.sum(per_level)))


def brownian_gridpath(
    seed: int, n_points: int, dim: int = 1, horizon: float = 1.0, scale: float = 1.0
) -> GridPath:
    """Piecewise-linear Brownian sample on a uniform grid (seeded)."""
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, horizon, n_points)
    dt = horizon / (n_points - 1)
    inc = rng.standard_normal((n_points - 1, dim)) * scale * math.sqrt(dt)
    values = np.vstack([np.zeros((1, dim)), np.cumsum(inc, axis=0)])
    return GridPath(times, values)
