"""The convex potential over log-radii and its derivatives.

``F(z) = integral_{-inf}^{z} arctan(exp(t)) dt`` equals the inverse tangent
integral ``Ti2(exp(z))``.  For ``z <= -1/2`` we sum the alternating power
series of ``Ti2``; near zero that series converges too slowly, so there we
expand around ``F(0) = Catalan`` using ``arctan(e^t) = pi/4 + gd(t)/2`` and
the Euler-number series of the Gudermannian.  Positive arguments use the
reflection ``F(z) = (pi/2) z + F(-z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from .planegraph import AngleGraph

CATALAN = 0.91596559417721901505
PINNED_LOG_RADIUS = math.log(math.tan(math.pi / 3))
PINNED_RADIUS = math.sqrt(3.0)  # correctly rounded, unlike exp(PINNED_LOG_RADIUS)
HALF_PI = 0.5 * math.pi


def _euler_numbers(count: int) -> list[int]:
    # E_0, E_2, E_4, ... from sum_k C(2n, 2k) E_2k = 0
    e = [1]
    for n in range(1, count):
        e.append(-sum(comb(2 * n, 2 * k) * e[k] for k in range(n)))
    return e


_NEAR = 0.5
_TI2_TERMS = 40
_TI2_COEF = np.array([(-1) ** k / (2 * k + 1) ** 2 for k in range(_TI2_TERMS)])
_GD_COEF = np.array([0.5 * e / math.factorial(2 * n + 2) for n, e in enumerate(_euler_numbers(24))])


def _horner(coef: np.ndarray, t: np.ndarray) -> np.ndarray:
    acc = np.full_like(t, coef[-1])
    for c in coef[-2::-1]:
        acc = acc * t + c
    return acc


def _F_nonpositive(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    near = z > -_NEAR
    if near.any():
        zn = z[near]
        out[near] = CATALAN + 0.25 * math.pi * zn + zn * zn * _horner(_GD_COEF, zn * zn)
    far = ~near
    if far.any():
        y = np.exp(z[far])
        out[far] = y * _horner(_TI2_COEF, y * y)
    return out


def kernel_F(z):
    """``F(z) = Ti2(e^z)``; accepts scalars or arrays."""
    za = np.asarray(z, dtype=float)
    flat = np.atleast_1d(za)
    neg = -np.abs(flat)
    val = _F_nonpositive(neg)
    val = np.where(flat > 0, HALF_PI * flat + val, val)
    return float(val[0]) if za.ndim == 0 else val.reshape(za.shape)


def kernel_F1(z):
    """``F'(z) = arctan(e^z)`` without overflow."""
    za = np.asarray(z, dtype=float)
    a = np.arctan(np.exp(-np.abs(za)))
    out = np.where(za > 0, HALF_PI - a, a)
    return float(out) if out.ndim == 0 else out


def kernel_F2(z):
    """``F''(z) = e^z / (e^{2z} + 1)``, evaluated on ``-|z|``."""
    za = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(za))
    out = e / (1.0 + e * e)
    return float(out) if out.ndim == 0 else out


def pair_F(d: np.ndarray) -> np.ndarray:
    """``F(d) + F(-d)`` computed as ``(pi/2)|d| + 2 F(-|d|)``."""
    a = np.abs(d)
    return HALF_PI * a + 2.0 * _F_nonpositive(-a)


@dataclass
class LogRadii:
    """Log-radii of the free vertices of an angle graph."""

    H: AngleGraph
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.H.n_free,):
            raise ValueError(f"expected {self.H.n_free} free log-radii, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("log-radii must be finite")

    def full(self) -> np.ndarray:
        return full_log_radii(self.H, self.values)

    def radii(self) -> np.ndarray:
        r = np.exp(self.full())
        r[list(self.H.pinned)] = PINNED_RADIUS
        return r

    @classmethod
    def zeros(cls, H: AngleGraph) -> "LogRadii":
        return cls(H, np.zeros(H.n_free))


def full_log_radii(H: AngleGraph, x: np.ndarray) -> np.ndarray:
    X = np.full(H.n, PINNED_LOG_RADIUS)
    X[H.free] = x
    return X


class Potential:
    """Evaluates the potential, gradient and Hessian on raw free-vertex vectors."""

    def __init__(self, H: AngleGraph):
        self.H = H
        self.n = H.n
        self.n_free = H.n_free
        self.eu = H.edges[:, 0]
        self.ew = H.edges[:, 1]
        self.fu = H.free_index[self.eu]
        self.fw = H.free_index[self.ew]
        both = (self.fu >= 0) & (self.fw >= 0)
        self._off_u = self.fu[both]
        self._off_w = self.fw[both]
        self._both = both
        self._pinned_sum = 3 * PINNED_LOG_RADIUS

    def full(self, x: np.ndarray) -> np.ndarray:
        return full_log_radii(self.H, x)

    def value(self, x: np.ndarray) -> float:
        X = self.full(x)
        xu, xw = X[self.eu], X[self.ew]
        edge = pair_F(xu - xw) - HALF_PI * (xu + xw)
        return float(np.sum(edge) + 2 * math.pi * (np.sum(x) + self._pinned_sum))

    def angle_sums(self, x: np.ndarray) -> np.ndarray:
        """Sum over neighbours w of arctan(r_w / r_u), for every H-vertex u."""
        X = self.full(x)
        d = X[self.ew] - X[self.eu]
        at_u = kernel_F1(d)
        at_w = kernel_F1(-d)
        return np.bincount(self.eu, at_u, self.n) + np.bincount(self.ew, at_w, self.n)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        s = self.angle_sums(x)
        return 2 * math.pi - 2 * s[self.H.free]

    def edge_weights(self, x: np.ndarray) -> np.ndarray:
        X = self.full(x)
        return 2.0 * kernel_F2(X[self.eu] - X[self.ew])

    def hessian(self, x: np.ndarray) -> sp.csr_matrix:
        w = self.edge_weights(x)
        nf = self.n_free
        wo = w[self._both]
        rows = np.concatenate([self._off_u, self._off_w])
        cols = np.concatenate([self._off_w, self._off_u])
        off = sp.csr_matrix((np.concatenate([wo, wo]), (rows, cols)), shape=(nf, nf))
        # edges to pinned vertices only reach the diagonal
        pu = (self.fu >= 0) & (self.fw < 0)
        pw = (self.fw >= 0) & (self.fu < 0)
        pinned = np.bincount(self.fu[pu], w[pu], nf) + np.bincount(self.fw[pw], w[pw], nf)
        # summing the row exactly as check_sdd does keeps dominance free of rounding noise
        diag = np.asarray(off.sum(axis=1)).ravel() + pinned
        return (sp.diags(diag, format="csr") - off).tocsr()

    def delta(self, x: np.ndarray, y: np.ndarray) -> float:
        """``Phi(y) - Phi(x)`` accurate even when far below the rounding level of Phi.

        Large differences are taken from direct evaluation; small ones are
        integrated from the gradient along the segment with Gauss-Legendre
        quadrature on pieces of infinity-norm length at most 1/4.
        """
        direct = self.value(y) - self.value(x)
        if abs(direct) > 1e-7 * (1.0 + abs(self.value(x))):
            return direct
        return self.segment_integral(x, y)

    def segment_integral(self, x: np.ndarray, y: np.ndarray, grad=None) -> float:
        grad = grad or self.gradient
        step = y - x
        length = float(np.max(np.abs(step))) if step.size else 0.0
        if length == 0.0:
            return 0.0
        pieces = max(1, math.ceil(length / 0.25))
        nodes, weights = np.polynomial.legendre.leggauss(8)
        total = 0.0
        for p in range(pieces):
            a, b = p / pieces, (p + 1) / pieces
            for t, wt in zip(0.5 * (b - a) * nodes + 0.5 * (a + b), 0.5 * (b - a) * weights):
                total += wt * float(grad(x + t * step) @ step)
        return total


def phi(x: LogRadii) -> float:
    return Potential(x.H).value(x.values)


def gradient(x: LogRadii) -> np.ndarray:
    return Potential(x.H).gradient(x.values)


def hessian(x: LogRadii) -> sp.csr_matrix:
    return Potential(x.H).hessian(x.values)


def check_sdd(A: sp.spmatrix) -> None:
    """Assert symmetric, non-positive off-diagonals and row diagonal dominance."""
    A = sp.csr_matrix(A)
    if (abs(A - A.T) > 0).nnz:
        raise AssertionError("Hessian is not symmetric")
    d = A.diagonal()
    off = A - sp.diags(d)
    if off.nnz and off.data.max() > 0:
        raise AssertionError("Hessian has a positive off-diagonal entry")
    offsum = np.asarray(abs(off).sum(axis=1)).ravel()
    if np.any(d < offsum):
        raise AssertionError("Hessian is not diagonally dominant")
