"""Controlled rough paths and their calculus.

A path controlled by a rough path X carries levels Y^0 .. Y^{N-1}; level i is
a linear map (R^d)^{(x)i} -> R^m stored as an (m, d**i) matrix per grid time.
The module computes the Taylor-type remainders R^i and the controlled norm,
implements the letter-splitting homomorphism delta_j combinatorially, the
composition with registry functions, scalar-path multiplication, and the
empirical composition-bound report.

Remainder contraction convention: the rough-path increment occupies the
leading tensor slots, R^i_{s,t} = Y^i_t - Y^i_s - sum_j Y^{i+j}_s (X^j_{s,t}
(x) . ).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iter_product

import numpy as np

from .functions import SmoothFunction
from .roughpath import RoughPathGrid

__all__ = [
    "ControlledPath",
    "RemainderReport",
    "CompositionBoundReport",
    "canonical_controlled",
    "remainders",
    "controlled_norm",
    "delta_split",
    "delta_assignments",
    "compose",
    "scalar_multiply",
    "scalar_path_hoelder_norm",
    "composition_bound_report",
]


class ControlledPath:
    """Levels of a controlled path on a grid; level i is (n, m, d**i)."""

    def __init__(self, times, levels, dim, validate=True):
        self.times = np.asarray(times, dtype=float)
        self.levels = [np.asarray(l, dtype=float) for l in levels]
        self.dim = int(dim)
        self.target_dim = self.levels[0].shape[1]
        if validate:
            n = self.times.size
            for i, lvl in enumerate(self.levels):
                want = (n, self.target_dim, self.dim**i)
                if lvl.shape != want:
                    raise ValueError(f"level {i} has shape {lvl.shape}, expected {want}")
        for lvl in self.levels:
            lvl.setflags(write=False)
        self.times.setflags(write=False)

    @property
    def depth(self) -> int:
        """Number of stored levels (N in the ambient rough-path depth)."""
        return len(self.levels)

    def __len__(self) -> int:
        return self.times.size

    def __add__(self, other: "ControlledPath") -> "ControlledPath":
        self._check_same_shape(other)
        return ControlledPath(
            self.times, [a + b for a, b in zip(self.levels, other.levels)], self.dim
        )

    def __sub__(self, other: "ControlledPath") -> "ControlledPath":
        self._check_same_shape(other)
        return ControlledPath(
            self.times, [a - b for a, b in zip(self.levels, other.levels)], self.dim
        )

    def __mul__(self, c: float) -> "ControlledPath":
        return ControlledPath(self.times, [c * a for a in self.levels], self.dim)

    __rmul__ = __mul__

    def _check_same_shape(self, other: "ControlledPath") -> None:
        if (
            self.dim != other.dim
            or self.target_dim != other.target_dim
            or self.depth != other.depth
            or len(self) != len(other)
        ):
            raise ValueError("controlled paths have mismatched shapes")

    def shift_level0(self, offset) -> "ControlledPath":
        """Add a constant to level 0 (higher levels untouched)."""
        levels = [lvl.copy() for lvl in self.levels]
        levels[0] = levels[0] + np.asarray(offset, dtype=float).reshape(1, -1, 1)
        return ControlledPath(self.times, levels, self.dim)

    def to_csv(self, path) -> None:
        """Rows: t, level, then the flattened (m x d**level) matrix entries."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "level", "entries..."])
            for k, t in enumerate(self.times):
                for i, lvl in enumerate(self.levels):
                    writer.writerow(
                        [repr(float(t)), i] + [repr(float(v)) for v in lvl[k].ravel()]
                    )


def _check_grids(Y: ControlledPath, X: RoughPathGrid) -> None:
    if len(Y) != len(X) or not np.array_equal(Y.times, X.times):
        raise ValueError("controlled path and rough path must share the grid")
    if Y.dim != X.dim:
        raise ValueError("controlled path letters must match the rough path dimension")
    if Y.depth != X.depth:
        raise ValueError(
            f"controlled path needs levels 0..{X.depth - 1} for a depth-{X.depth} rough path"
        )


def canonical_controlled(X: RoughPathGrid, base=None) -> ControlledPath:
    """The path underlying X as the controlled path (X, id, 0, ..., 0).

    Level 0 reconstructs the path from the lift's base point plus the level-1
    increments; pass ``base`` to override the starting value.
    """
    n, d = len(X), X.dim
    base = X.base if base is None else np.asarray(base, dtype=float)
    levels = [(base[None, :] + X.levels[1])[:, :, None]]
    if X.depth >= 2:
        eye = np.broadcast_to(np.eye(d).reshape(1, d, d), (n, d, d)).copy()
        levels.append(eye)
    for i in range(2, X.depth):
        levels.append(np.zeros((n, d, d**i)))
    return ControlledPath(X.times, levels, d)


@dataclass(frozen=True)
class RemainderReport:
    """Remainder seminorms ||R^i||_{(N-i)alpha} and the controlled norm."""

    alpha: float
    per_level_seminorms: np.ndarray
    per_level_max_abs: np.ndarray
    level0_norms: np.ndarray
    controlled_norm: float


def _remainder_block(Y: ControlledPath, X: RoughPathGrid, s: int):
    """R^i_{s,t} for all t > s, one array (n-1-s, m, d**i) per level."""
    n, d, N = len(Y), Y.dim, X.depth
    inv = X.inverse_levels()
    incs = []
    for j in range(1, N):
        acc = np.zeros((n - 1 - s, d**j))
        for p in range(j + 1):
            q = j - p
            term = inv[p][s][None, :, None] * X.levels[q][s + 1 :, None, :]
            acc += term.reshape(n - 1 - s, d**j)
        incs.append(acc)
    out = []
    for i in range(N):
        r = Y.levels[i][s + 1 :] - Y.levels[i][s][None]
        for j in range(1, N - i):
            higher = Y.levels[i + j][s].reshape(Y.target_dim, d**j, d**i)
            r = r - np.einsum("mjw,tj->tmw", higher, incs[j - 1])
        out.append(r)
    return out


def remainders(Y: ControlledPath, X: RoughPathGrid) -> RemainderReport:
    """Grid-pair remainders of Y with respect to X.

    Seminorms are sups of Frobenius norms over all grid pairs weighted by
    |t-s|^{-(N-i)alpha}.
    """
    _check_grids(Y, X)
    n, N = len(Y), X.depth
    seminorms = np.zeros(N)
    max_abs = np.zeros(N)
    for s in range(n - 1):
        dt = X.times[s + 1 :] - X.times[s]
        for i, r in enumerate(_remainder_block(Y, X, s)):
            norms = np.sqrt(np.sum(r * r, axis=(1, 2)))
            seminorms[i] = max(seminorms[i], float(np.max(norms / dt ** ((N - i) * X.alpha))))
            max_abs[i] = max(max_abs[i], float(np.max(np.abs(r))))
    level0 = np.array([float(np.linalg.norm(lvl[0])) for lvl in Y.levels])
    total = float(np.sum(level0) + np.sum(seminorms))
    return RemainderReport(X.alpha, seminorms, max_abs, level0, total)


def controlled_norm(Y: ControlledPath, X: RoughPathGrid) -> float:
    """sum_i |Y^i_0| + sum_i ||R^i||_{(N-i)alpha} (Frobenius at t=0)."""
    return remainders(Y, X).controlled_norm


@lru_cache(maxsize=None)
def delta_assignments(r: int, j: int) -> dict[tuple[int, ...], tuple[tuple[tuple[int, ...], ...], ...]]:
    """Order-preserving distributions of r letter positions into j slots.

    Maps each composition (i_1, ..., i_j) of r into positive parts to the
    tuple of assignments realizing it; an assignment lists, per slot, the
    original letter positions it receives (increasing within each slot).
    """
    if j > r:
        return {}
    out: dict[tuple[int, ...], list] = {}
    for slots_of in iter_product(range(j), repeat=r):
        slots = tuple(
            tuple(pos for pos in range(r) if slots_of[pos] == k) for k in range(j)
        )
        if any(len(s) == 0 for s in slots):
            continue
        comp = tuple(len(s) for s in slots)
        out.setdefault(comp, []).append(slots)
    return {comp: tuple(v) for comp, v in out.items()}


def delta_split(r: int, j: int) -> list[tuple[tuple[int, ...], int]]:
    """Compositions of r into j positive parts with their distribution counts.

    The count of (i_1, ..., i_j) is the multinomial r! / (i_1! ... i_j!),
    realized by the order-preserving letter distributions of
    :func:`delta_assignments`.
    """
    return [(comp, len(asgn)) for comp, asgn in sorted(delta_assignments(r, j).items())]


def compose(phi: SmoothFunction, Y: ControlledPath, X: RoughPathGrid) -> ControlledPath:
    """Controlled path of phi(Y): level r collects the delta_j letter splits.

    phi(Y)^r = sum_{j<=r} (1/j!) D^j phi(Y^0) applied to the slotwise levels
    Y^{i_1} (x) ... (x) Y^{i_j} over all order-preserving distributions of the
    r letters.
    """
    _check_grids(Y, X)
    if phi.in_dim != Y.target_dim:
        raise ValueError(
            f"{phi.name} expects input dim {phi.in_dim}, controlled path has {Y.target_dim}"
        )
    n, d, N = len(Y), Y.dim, Y.depth
    if phi.max_order < N - 1:
        raise ValueError(f"{phi.name} provides derivatives up to {phi.max_order}, need {N - 1}")
    y0 = Y.levels[0][:, :, 0]
    out_levels = [phi.value(y0)[:, :, None]]
    ylev = [Y.levels[i].reshape((n, Y.target_dim) + (d,) * i) for i in range(N)]
    for r in range(1, N):
        acc = np.zeros((n, phi.out_dim) + (d,) * r)
        for j in range(1, r + 1):
            dj = phi.derivative(j, y0).reshape((n, phi.out_dim) + (Y.target_dim,) * j)
            coeff = 1.0 / math.factorial(j)
            for comp, assignments in delta_assignments(r, j).items():
                if any(ik > N - 1 for ik in comp):
                    continue
                for slots in assignments:
                    acc += coeff * _apply_assignment(dj, ylev, slots, r)
        out_levels.append(acc.reshape(n, phi.out_dim, d**r))
    return ControlledPath(Y.times, out_levels, d)


def _apply_assignment(dj, ylev, slots, r):
    """Contract D^j phi with the slotwise levels, axes back in letter order."""
    letters = "abcdefgh"[: len(slots)]
    args, terms = [dj], [f"no{''.join(letters)}"]
    out_positions = []
    for k, slot in enumerate(slots):
        axes = "".join(chr(ord("p") + pos) for pos in slot)
        terms.append(f"n{letters[k]}{axes}")
        args.append(ylev[len(slot)])
        out_positions.extend(slot)
    out_axes = "".join(chr(ord("p") + pos) for pos in range(r))
    spec = ",".join(terms) + f"->no{out_axes}"
    return np.einsum(spec, *args)


def scalar_multiply(g_values: np.ndarray, Y: ControlledPath) -> ControlledPath:
    """Multiply every level of Y by the scalar grid path g: (gY)^i = g Y^i."""
    g = np.asarray(g_values, dtype=float).ravel()
    if g.size != len(Y):
        raise ValueError("scalar path must live on the controlled path's grid")
    return ControlledPath(
        Y.times, [g[:, None, None] * lvl for lvl in Y.levels], Y.dim
    )


def scalar_path_hoelder_norm(g_values, times, exponent: float) -> float:
    """Grid norm ||g||_{C^exponent} = sup |g| + Hoelder-exponent seminorm."""
    g = np.asarray(g_values, dtype=float).ravel()
    t = np.asarray(times, dtype=float).ravel()
    semi = 0.0
    for s in range(g.size - 1):
        dt = t[s + 1 :] - t[s]
        semi = max(semi, float(np.max(np.abs(g[s + 1 :] - g[s]) / dt**exponent)))
    return float(np.max(np.abs(g))) + semi


def _level_c_alpha_norms(Y: ControlledPath, alpha: float) -> np.ndarray:
    """||Y^i||_{C^alpha} per level i >= 1 (sup norm plus alpha seminorm)."""
    out = []
    for lvl in Y.levels[1:]:
        flat = lvl.reshape(len(Y), -1)
        sup = float(np.max(np.sqrt(np.sum(flat * flat, axis=1))))
        semi = 0.0
        for s in range(len(Y) - 1):
            dt = Y.times[s + 1 :] - Y.times[s]
            diff = flat[s + 1 :] - flat[s]
            semi = max(semi, float(np.max(np.sqrt(np.sum(diff * diff, axis=1)) / dt**alpha)))
        out.append(sup + semi)
    return np.asarray(out)


@dataclass(frozen=True)
class CompositionBoundReport:
    """Diagnostic ratio for the composition norm bound (exponents l = k = 1)."""

    lhs_norm: float
    derivative_sum: float
    level_norm_sum: float
    one_plus_controlled: float
    ratio: float
    finite: bool


def composition_bound_report(
    phi: SmoothFunction, Y: ControlledPath, X: RoughPathGrid
) -> CompositionBoundReport:
    """Ratio ||phi(Y)||_{X,alpha} / [(sum ||D^i phi||)(sum ||Y^i||_{C^alpha})(1 + ||Y||_{X,alpha})].

    Reporting normalization only; the bound's true exponents are unknown, so
    l = k = 1 is fixed and the ratio is a diagnostic, not an assertion.
    """
    lhs = controlled_norm(compose(phi, Y, X), X)
    dsum = sum(phi.sup_norm(i) for i in range(X.depth + 1))
    lsum = float(np.sum(_level_c_alpha_norms(Y, X.alpha)))
    ynorm = 1.0 + controlled_norm(Y, X)
    finite = math.isfinite(dsum)
    denom = dsum * lsum * ynorm
    ratio = lhs / denom if finite and denom > 0 else math.nan
    return CompositionBoundReport(lhs, dsum, lsum, ynorm, ratio, finite and denom > 0)
