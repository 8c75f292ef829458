"""Truncated tensor algebra over R^d.

Elements of T^{<=N}(R^d) are stored densely, one flat coefficient array per
level; level k holds d^k reals indexed lexicographically by words over the
alphabet {1, ..., d} (most significant letter first).  The module provides the
graded truncated tensor product, the shuffle product, the natural pairing,
the tensor exponential of a level-1 vector and the group inverse of
group-like elements.  Everything is a pure function of immutable values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

MAX_DEPTH = 6
MAX_DIM = 4

__all__ = [
    "MAX_DEPTH",
    "MAX_DIM",
    "TruncatedTensor",
    "Word",
    "word_to_index",
    "index_to_word",
    "unit",
    "basis_word",
    "tensor_mul",
    "shuffle_mul",
    "pairing",
    "tensor_exp",
    "tensor_inverse",
]


def word_to_index(letters: tuple[int, ...], dim: int) -> int:
    """Flat lexicographic index of a word with letters in 1..dim."""
    idx = 0
    for a in letters:
        if not 1 <= a <= dim:
            raise ValueError(f"letter {a} outside alphabet 1..{dim}")
        idx = idx * dim + (a - 1)
    return idx


def index_to_word(idx: int, length: int, dim: int) -> tuple[int, ...]:
    """Inverse of :func:`word_to_index` for words of the given length."""
    letters = []
    for _ in range(length):
        letters.append(idx % dim + 1)
        idx //= dim
    return tuple(reversed(letters))


@dataclass(frozen=True)
class Word:
    """A word over the alphabet {1, ..., dim}; the empty word is allowed."""

    letters: tuple[int, ...]
    dim: int

    def __post_init__(self):
        if len(self.letters) > MAX_DEPTH:
            raise ValueError(f"word length {len(self.letters)} exceeds {MAX_DEPTH}")
        for a in self.letters:
            if not 1 <= a <= self.dim:
                raise ValueError(f"letter {a} outside alphabet 1..{self.dim}")

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def index(self) -> int:
        return word_to_index(self.letters, self.dim)


@dataclass(frozen=True)
class TruncatedTensor:
    """Element of T^{<=N}(R^d) with dense per-level coefficient arrays."""

    dim: int
    depth: int
    levels: tuple[np.ndarray, ...] = field(compare=False)

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise ValueError(f"dim must be in 1..{MAX_DIM}, got {self.dim}")
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must be in 0..{MAX_DEPTH}, got {self.depth}")
        if len(self.levels) != self.depth + 1:
            raise ValueError(
                f"expected {self.depth + 1} levels, got {len(self.levels)}"
            )
        frozen = []
        for k, lvl in enumerate(self.levels):
            arr = np.ascontiguousarray(np.asarray(lvl, dtype=float).ravel())
            if arr.size != self.dim**k:
                raise ValueError(
                    f"level {k} has {arr.size} entries, expected {self.dim ** k}"
                )
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "levels", tuple(frozen))

    @property
    def scalar(self) -> float:
        return float(self.levels[0][0])

    def is_group_like(self, tol: float = 1e-12) -> bool:
        return abs(self.scalar - 1.0) <= tol

    def coefficient(self, word: Word | tuple[int, ...]) -> float:
        letters = word.letters if isinstance(word, Word) else tuple(word)
        if len(letters) > self.depth:
            return 0.0
        return float(self.levels[len(letters)][word_to_index(letters, self.dim)])

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(lvl))) for lvl in self.levels)

    def __add__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        _check_compatible(self, other)
        return TruncatedTensor(
            self.dim,
            self.depth,
            tuple(a + b for a, b in zip(self.levels, other.levels)),
        )

    def __sub__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        _check_compatible(self, other)
        return TruncatedTensor(
            self.dim,
            self.depth,
            tuple(a - b for a, b in zip(self.levels, other.levels)),
        )

    def __mul__(self, c: float) -> "TruncatedTensor":
        return TruncatedTensor(self.dim, self.depth, tuple(c * a for a in self.levels))

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        """Write one row per (level, flat lexicographic index, value)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "index", "value"])
            for k, lvl in enumerate(self.levels):
                for i, v in enumerate(lvl):
                    writer.writerow([k, i, repr(float(v))])

    @classmethod
    def from_csv(cls, path, dim: int, depth: int) -> "TruncatedTensor":
        levels = [np.zeros(dim**k) for k in range(depth + 1)]
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                levels[int(row["level"])][int(row["index"])] = float(row["value"])
        return cls(dim, depth, tuple(levels))


def _check_compatible(a: TruncatedTensor, b: TruncatedTensor) -> None:
    if a.dim != b.dim or a.depth != b.depth:
        raise ValueError(
            f"incompatible tensors: dim/depth ({a.dim},{a.depth}) vs ({b.dim},{b.depth})"
        )


def unit(dim: int, depth: int) -> TruncatedTensor:
    """The algebra unit 1 (level 0 equal to one, all higher levels zero)."""
    levels = [np.zeros(dim**k) for k in range(depth + 1)]
    levels[0][0] = 1.0
    return TruncatedTensor(dim, depth, tuple(levels))


def basis_word(letters: tuple[int, ...], dim: int, depth: int) -> TruncatedTensor:
    """The basis element e_{letters} as a truncated tensor."""
    if len(letters) > depth:
        raise ValueError(f"word longer than depth {depth}")
    levels = [np.zeros(dim**k) for k in range(depth + 1)]
    levels[len(letters)][word_to_index(letters, dim)] = 1.0
    return TruncatedTensor(dim, depth, tuple(levels))


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Graded truncated tensor product; levels above the depth are discarded."""
    _check_compatible(a, b)
    d, n = a.dim, a.depth
    out = [np.zeros(d**k) for k in range(n + 1)]
    for r in range(n + 1):
        acc = out[r]
        for p in range(r + 1):
            q = r - p
            acc += np.multiply.outer(a.levels[p], b.levels[q]).ravel()
    return TruncatedTensor(d, n, tuple(out))


@lru_cache(maxsize=None)
def _digits(dim: int, length: int) -> np.ndarray:
    """(dim**length, length) array of 0-based letters, most significant first."""
    idx = np.arange(dim**length, dtype=np.int64)
    out = np.empty((dim**length, length), dtype=np.int64)
    for pos in range(length):
        out[:, pos] = (idx // dim ** (length - 1 - pos)) % dim
    return out


@lru_cache(maxsize=None)
def _shuffle_scatter(dim: int, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Index maps realizing the shuffle of levels p and q.

    Returns arrays (n_patterns, dim**p) and (n_patterns, dim**q) whose outer
    sum per pattern gives the flat result index at level p+q.  A pattern is a
    choice of the positions taken by the first word's letters.
    """
    r = p + q
    dig_p = _digits(dim, p) if p else np.zeros((1, 0), dtype=np.int64)
    dig_q = _digits(dim, q) if q else np.zeros((1, 0), dtype=np.int64)
    contribs_a, contribs_b = [], []
    for pattern in combinations(range(r), p):
        comp = [pos for pos in range(r) if pos not in pattern]
        wa = np.array([dim ** (r - 1 - pos) for pos in pattern], dtype=np.int64)
        wb = np.array([dim ** (r - 1 - pos) for pos in comp], dtype=np.int64)
        contribs_a.append(dig_p @ wa if p else np.zeros(1, dtype=np.int64))
        contribs_b.append(dig_q @ wb if q else np.zeros(1, dtype=np.int64))
    return np.stack(contribs_a), np.stack(contribs_b)


def shuffle_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Shuffle product, the bilinear extension of word interleaving."""
    _check_compatible(a, b)
    d, n = a.dim, a.depth
    out = [np.zeros(d**k) for k in range(n + 1)]
    for r in range(n + 1):
        for p in range(r + 1):
            q = r - p
            if not np.any(a.levels[p]) or not np.any(b.levels[q]):
                continue
            prod = np.multiply.outer(a.levels[p], b.levels[q]).ravel()
            ca, cb = _shuffle_scatter(d, p, q)
            for k in range(ca.shape[0]):
                flat = (ca[k][:, None] + cb[k][None, :]).ravel()
                out[r] += np.bincount(flat, weights=prod, minlength=d**r)
    return TruncatedTensor(d, n, tuple(out))


def pairing(a: TruncatedTensor, b: TruncatedTensor) -> float:
    """Natural pairing: sum of level-wise Euclidean inner products."""
    _check_compatible(a, b)
    return float(sum(np.dot(x, y) for x, y in zip(a.levels, b.levels)))


def tensor_exp(v: np.ndarray, depth: int) -> TruncatedTensor:
    """Tensor exponential of a level-1 vector: level k equals v^{(x)k} / k!."""
    v = np.asarray(v, dtype=float).ravel()
    d = v.size
    levels = [np.zeros(d**k) for k in range(depth + 1)]
    levels[0][0] = 1.0
    cur = np.ones(1)
    for k in range(1, depth + 1):
        cur = np.multiply.outer(cur, v).ravel()
        levels[k] = cur / math.factorial(k)
    return TruncatedTensor(d, depth, tuple(levels))


def tensor_inverse(a: TruncatedTensor) -> TruncatedTensor:
    """Group inverse of a group-like element via the truncated Neumann series.

    With a = 1 + n (n strictly positive degree), the inverse is
    sum_k (-1)^k n^{(x)k}, truncated at the depth.
    """
    if not a.is_group_like(tol=1e-9):
        raise ValueError(f"not group-like: level-0 entry is {a.scalar!r}, expected 1")
    d, n = a.dim, a.depth
    nil_levels = [lvl.copy() for lvl in a.levels]
    nil_levels[0] = np.zeros(1)
    nil = TruncatedTensor(d, n, tuple(nil_levels))
    result = unit(d, n)
    power = unit(d, n)
    sign = 1.0
    for _ in range(n):
        power = tensor_mul(power, nil)
        sign = -sign
        result = result + sign * power
    return result
