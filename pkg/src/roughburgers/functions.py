"""Registry of smooth functions with analytic derivatives.

Controlled-path composition needs the differentials D^j(phi) in closed form
(no numeric differentiation), together with sup-norm bounds where they are
finite.  The registry is closed: identity, constants, linear maps,
componentwise scalar families (tanh, sin, cos, Gaussian) and diagonal
matrix-valued variants used as the SPDE transport coefficient.  Norms of
derivative tensors are Frobenius norms throughout.

The module also hosts scaled functions f with the window norm
||f||_{1,1} = sum_n sup_{0<=t<=1} (|f(n+t)| + |f'(n+t)|), which controls
rough integrals against rapidly oscillating scalings f(lambda * .).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "ScalarFamily",
    "SmoothFunction",
    "Identity",
    "Constant",
    "Linear",
    "Componentwise",
    "DiagMatrix",
    "Shifted",
    "Composite",
    "make_function",
    "ScaledFunction",
    "GaussianBump",
    "window_norm_11",
]

_PROBE = np.linspace(-30.0, 30.0, 24001)


class ScalarFamily:
    """A scalar C^inf function with derivatives of every order."""

    name = "family"

    def eval(self, order: int, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @lru_cache(maxsize=32)
    def sup(self, order: int) -> float:
        """Numerical sup of |d^order psi| (families here are bounded)."""
        return float(np.max(np.abs(self.eval(order, _PROBE))))


class _Tanh(ScalarFamily):
    """tanh and its derivatives as polynomials in T = tanh(y)."""

    name = "tanh"

    @staticmethod
    @lru_cache(maxsize=32)
    def _poly(order: int) -> np.polynomial.Polynomial:
        p = np.polynomial.Polynomial([0.0, 1.0])
        one_minus_t2 = np.polynomial.Polynomial([1.0, 0.0, -1.0])
        for _ in range(order):
            p = p.deriv() * one_minus_t2
        return p

    def eval(self, order, y):
        return self._poly(order)(np.tanh(y))


class _Sin(ScalarFamily):
    name = "sin"

    def eval(self, order, y):
        return np.sin(np.asarray(y) + order * math.pi / 2)

    def sup(self, order):
        return 1.0


class _Cos(ScalarFamily):
    name = "cos"

    def eval(self, order, y):
        return np.cos(np.asarray(y) + order * math.pi / 2)

    def sup(self, order):
        return 1.0


class _Gauss(ScalarFamily):
    """exp(-y^2/2); derivatives via probabilists' Hermite polynomials."""

    name = "gauss"

    @staticmethod
    @lru_cache(maxsize=32)
    def _hermite(order: int) -> np.polynomial.Polynomial:
        h_prev = np.polynomial.Polynomial([1.0])
        if order == 0:
            return h_prev
        h = np.polynomial.Polynomial([0.0, 1.0])
        for j in range(1, order):
            h, h_prev = np.polynomial.Polynomial([0.0, 1.0]) * h - j * h_prev, h
        return h

    def eval(self, order, y):
        y = np.asarray(y)
        return (-1.0) ** order * self._hermite(order)(y) * np.exp(-0.5 * y * y)


FAMILIES: dict[str, ScalarFamily] = {
    f.name: f for f in (_Tanh(), _Sin(), _Cos(), _Gauss())
}


class SmoothFunction:
    """phi: R^{in_dim} -> R^{out_dim} with analytic differentials.

    ``value(y)`` maps (n, in_dim) -> (n, out_dim); ``derivative(j, y)`` maps
    to (n, out_dim, in_dim**j) with the j input slots flattened
    lexicographically; ``sup_norm(j)`` is ||D^j phi||_inf (may be inf).
    """

    name = "smooth"
    in_dim: int
    out_dim: int
    max_order: int = 8

    def value(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, order: int, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sup_norm(self, order: int) -> float:
        raise NotImplementedError

    def _check_y(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if y.shape[1] != self.in_dim:
            raise ValueError(f"{self.name}: expected input dim {self.in_dim}, got {y.shape[1]}")
        return y


class Identity(SmoothFunction):
    name = "identity"

    def __init__(self, dim: int):
        self.in_dim = self.out_dim = dim

    def value(self, y):
        return self._check_y(y).copy()

    def derivative(self, order, y):
        y = self._check_y(y)
        n, m = y.shape[0], self.in_dim
        if order == 1:
            return np.broadcast_to(np.eye(m).reshape(1, m, m), (n, m, m)).copy()
        return np.zeros((n, m, m**order))

    def sup_norm(self, order):
        if order == 0:
            return math.inf
        return math.sqrt(self.in_dim) if order == 1 else 0.0


class Constant(SmoothFunction):
    name = "constant"

    def __init__(self, values, in_dim: int):
        self.values = np.asarray(values, dtype=float).ravel()
        self.in_dim = in_dim
        self.out_dim = self.values.size

    def value(self, y):
        y = self._check_y(y)
        return np.broadcast_to(self.values, (y.shape[0], self.out_dim)).copy()

    def derivative(self, order, y):
        y = self._check_y(y)
        return np.zeros((y.shape[0], self.out_dim, self.in_dim**order))

    def sup_norm(self, order):
        return float(np.linalg.norm(self.values)) if order == 0 else 0.0


class Linear(SmoothFunction):
    name = "linear"

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.out_dim, self.in_dim = self.matrix.shape

    def value(self, y):
        return self._check_y(y) @ self.matrix.T

    def derivative(self, order, y):
        y = self._check_y(y)
        n = y.shape[0]
        if order == 1:
            return np.broadcast_to(self.matrix, (n,) + self.matrix.shape).copy()
        return np.zeros((n, self.out_dim, self.in_dim**order))

    def sup_norm(self, order):
        if order == 0:
            return 0.0 if not np.any(self.matrix) else math.inf
        return float(np.linalg.norm(self.matrix)) if order == 1 else 0.0


class Componentwise(SmoothFunction):
    """phi_a(y) = scale * psi(gain * y_a + shift) per component."""

    def __init__(self, family: str | ScalarFamily, dim: int,
                 scale: float = 1.0, gain: float = 1.0, shift: float = 0.0):
        self.family = FAMILIES[family] if isinstance(family, str) else family
        self.in_dim = self.out_dim = dim
        self.scale, self.gain, self.shift = float(scale), float(gain), float(shift)
        self.name = f"{self.family.name}(componentwise)"

    def _arg(self, y):
        return self.gain * y + self.shift

    def value(self, y):
        y = self._check_y(y)
        return self.scale * self.family.eval(0, self._arg(y))

    def derivative(self, order, y):
        y = self._check_y(y)
        n, m = y.shape[0], self.in_dim
        psi = self.scale * self.gain**order * self.family.eval(order, self._arg(y))
        out = np.zeros((n, m, m**order))
        for a in range(m):
            flat = sum(a * m**p for p in range(order))
            out[:, a, flat] = psi[:, a]
        return out

    def sup_norm(self, order):
        return abs(self.scale) * abs(self.gain) ** order * self.family.sup(order) * (
            math.sqrt(self.in_dim)
        )


class DiagMatrix(SmoothFunction):
    """Matrix-valued g(y)_{ab} = delta_{ab} scale * psi(gain y_a + shift).

    The output is flattened as t = a * dim + b, so that b is the slot paired
    with the driving increment when the value is read as a map in
    L(R^d, R^d).
    """

    def __init__(self, family: str | ScalarFamily, dim: int,
                 scale: float = 1.0, gain: float = 1.0, shift: float = 0.0):
        self.family = FAMILIES[family] if isinstance(family, str) else family
        self.in_dim = dim
        self.out_dim = dim * dim
        self.scale, self.gain, self.shift = float(scale), float(gain), float(shift)
        self.name = f"diag_{self.family.name}"

    def value(self, y):
        y = self._check_y(y)
        n, m = y.shape[0], self.in_dim
        psi = self.scale * self.family.eval(0, self.gain * y + self.shift)
        out = np.zeros((n, m, m))
        idx = np.arange(m)
        out[:, idx, idx] = psi
        return out.reshape(n, self.out_dim)

    def derivative(self, order, y):
        y = self._check_y(y)
        n, m = y.shape[0], self.in_dim
        psi = self.scale * self.gain**order * self.family.eval(order, self.gain * y + self.shift)
        out = np.zeros((n, self.out_dim, m**order))
        for a in range(m):
            flat = sum(a * m**p for p in range(order))
            out[:, a * m + a, flat] = psi[:, a]
        return out

    def sup_norm(self, order):
        return abs(self.scale) * abs(self.gain) ** order * self.family.sup(order) * (
            math.sqrt(self.in_dim)
        )


class Shifted(SmoothFunction):
    """phi(y + c) with a per-evaluation-point shift array c.

    Used to freeze slowly varying arguments: the shift row k is added to the
    k-th input row, so the function must be evaluated on inputs aligned with
    the shift grid.
    """

    def __init__(self, base: SmoothFunction, shifts: np.ndarray):
        self.base = base
        self.shifts = np.asarray(shifts, dtype=float)
        if self.shifts.ndim == 1:
            self.shifts = self.shifts[:, None]
        if self.shifts.shape[1] != base.in_dim:
            raise ValueError("shift width must match the base input dimension")
        self.in_dim = base.in_dim
        self.out_dim = base.out_dim
        self.name = f"shifted({base.name})"

    def _shifted(self, y):
        y = self._check_y(y)
        if y.shape[0] != self.shifts.shape[0]:
            raise ValueError("input rows must align with the shift grid")
        return y + self.shifts

    def value(self, y):
        return self.base.value(self._shifted(y))

    def derivative(self, order, y):
        return self.base.derivative(order, self._shifted(y))

    def sup_norm(self, order):
        return self.base.sup_norm(order)


class Composite(SmoothFunction):
    """outer(inner(y)) with chain-rule differentials up to order 2."""

    max_order = 2

    def __init__(self, outer: SmoothFunction, inner: SmoothFunction):
        if inner.out_dim != outer.in_dim:
            raise ValueError("composition dimensions do not match")
        self.outer, self.inner = outer, inner
        self.in_dim = inner.in_dim
        self.out_dim = outer.out_dim
        self.name = f"{outer.name}o{inner.name}"

    def value(self, y):
        return self.outer.value(self.inner.value(y))

    def derivative(self, order, y):
        y = self._check_y(y)
        z = self.inner.value(y)
        m = self.in_dim
        d_out1 = self.outer.derivative(1, z)
        d_in1 = self.inner.derivative(1, y)
        if order == 1:
            return np.einsum("nok,nki->noi", d_out1, d_in1)
        if order == 2:
            d_out2 = self.outer.derivative(2, z).reshape(
                y.shape[0], self.out_dim, self.outer.in_dim, self.outer.in_dim
            )
            d_in2 = self.inner.derivative(2, y).reshape(
                y.shape[0], self.outer.in_dim, m, m
            )
            term1 = np.einsum("nokl,nki,nlj->noij", d_out2, d_in1, d_in1)
            term2 = np.einsum("nok,nkij->noij", d_out1, d_in2)
            return (term1 + term2).reshape(y.shape[0], self.out_dim, m * m)
        raise ValueError("composite derivatives available up to order 2 only")

    def sup_norm(self, order):
        if order == 0:
            return self.outer.sup_norm(0)
        if order == 1:
            return self.outer.sup_norm(1) * self.inner.sup_norm(1)
        return math.inf


def make_function(name: str, dim: int, **params) -> SmoothFunction:
    """Build a registry function by name.

    Names: zero, identity, neg_identity, constant, linear, tanh, sin, cos,
    gauss (componentwise families) and diag_tanh / diag_gauss (matrix-valued
    coefficients).  Parameters scale / gain / shift apply to the families.
    """
    name = name.lower()
    if name == "zero":
        return Constant(np.zeros(int(params.get("out_dim", dim))), dim)
    if name == "identity":
        return Identity(dim)
    if name == "neg_identity":
        return Linear(-np.eye(dim))
    if name == "constant":
        return Constant(np.asarray(params["values"], dtype=float), dim)
    if name == "linear":
        return Linear(np.asarray(params["matrix"], dtype=float))
    if name in FAMILIES:
        return Componentwise(name, dim, **{k: params[k] for k in ("scale", "gain", "shift") if k in params})
    if name.startswith("diag_") and name[5:] in FAMILIES:
        return DiagMatrix(name[5:], dim, **{k: params[k] for k in ("scale", "gain", "shift") if k in params})
    raise ValueError(f"unknown registry function {name!r}")


def window_norm_11(
    f, fprime, window: int = 64, samples_per_window: int = 65
) -> tuple[float, float]:
    """Window-truncated ||f||_{1,1} plus a geometric tail estimate.

    Returns (norm, tail_bound).  Sups over unit windows are taken on a dense
    sample; the tail beyond |n| <= window is extrapolated from the decay of
    the outermost window masses.
    """
    offs = np.linspace(0.0, 1.0, samples_per_window)
    ns = np.arange(-window, window)
    pts = ns[:, None] + offs[None, :]
    mass = np.max(np.abs(f(pts)) + np.abs(fprime(pts)), axis=1)
    total = float(np.sum(mass))
    tail = 0.0
    for side in (mass[:2], mass[-2:][::-1]):
        outer, inner = float(side[0]), float(side[1])
        if outer <= 0.0:
            continue
        ratio = outer / inner if inner > 0 else 0.0
        if 0.0 < ratio < 0.9:
            tail += outer * ratio / (1.0 - ratio)
        else:
            tail += outer  # conservative single extra window
    return total + tail, tail


@dataclass(frozen=True)
class ScaledFunction:
    """A C^1 scalar function with finite ||f||_{1,1}."""

    name: str
    f: callable
    fprime: callable
    norm_11: float
    tail_bound: float

    def __call__(self, y):
        return self.f(np.asarray(y, dtype=float))


def GaussianBump(center: float = 0.5, width: float = 0.25) -> ScaledFunction:
    """exp(-((y - center) / width)^2 / 2); decays fast enough for any window."""
    c, w = float(center), float(width)

    def f(y):
        z = (np.asarray(y, dtype=float) - c) / w
        return np.exp(-0.5 * z * z)

    def fp(y):
        z = (np.asarray(y, dtype=float) - c) / w
        return -z / w * np.exp(-0.5 * z * z)

    norm, tail = window_norm_11(f, fp)
    return ScaledFunction(f"gaussian_bump(c={c},w={w})", f, fp, norm, tail)
