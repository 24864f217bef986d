"""Truncated Taylor jets over mixed holomorphic / antiholomorphic coordinates.

A jet stores the Taylor expansion of a (generally complex valued) function
of ``m`` complex coordinates ``u = (z^1..z^n, v^1..v^r)`` around a basepoint,
truncated at total order ``order`` (at most 4).  The expansion variables are
the ``2m`` displacements ``du^a`` and ``d(conj u)^a`` treated as independent;
this is a complex-linear change of the ``2m`` real coordinates
``(Re u, Im u)`` and makes Wirtinger extraction a pure lookup::

    d/du    = 1/2 (d/dx - i d/dy)
    d/dubar = 1/2 (d/dx + i d/dy)

Coefficients are stored densely, one slot per multi-index, and may carry
leading batch axes so that many basepoints are expanded in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np
import numba

MAX_ORDER = 4
REAL_TOL = 1e-10


class JetError(ValueError):
    """Raised for invalid jet operations (off E^o, degenerate values, order overflow)."""


@dataclass(frozen=True)
class CoordinateFrame:
    """Base dimension ``n`` and fiber rank ``r``.

    Holomorphic coordinates are enumerated ``z^1..z^n, v^1..v^r`` (indices
    ``0..n+r-1``); the real enumeration used by :meth:`real_labels` is
    ``Re, Im`` of each in that order.
    """

    n: int
    r: int

    def __post_init__(self):
        if self.n < 1 or self.r < 1:
            raise ValueError(f"need n >= 1 and r >= 1, got n={self.n}, r={self.r}")

    @property
    def m(self) -> int:
        return self.n + self.r

    def base_index(self, alpha: int) -> int:
        return alpha

    def fiber_index(self, i: int) -> int:
        return self.n + i

    def real_labels(self) -> list[str]:
        names = [f"z{a + 1}" for a in range(self.n)] + [f"v{i + 1}" for i in range(self.r)]
        return [f"{p}({c})" for c in names for p in ("Re", "Im")]


@lru_cache(maxsize=None)
def _tables(nvar: int, order: int):
    """Monomial tables for ``nvar`` expansion variables up to ``order``."""
    exps = []
    for deg in range(order + 1):
        for combo in combinations_with_replacement(range(nvar), deg):
            e = [0] * nvar
            for k in combo:
                e[k] += 1
            exps.append(tuple(e))
    index = {e: k for k, e in enumerate(exps)}
    exps_arr = np.array(exps, dtype=np.int64).reshape(len(exps), nvar)
    degree = exps_arr.sum(axis=1)

    ii, jj, kk = [], [], []
    for a, ea in enumerate(exps):
        da = degree[a]
        for b, eb in enumerate(exps):
            if da + degree[b] > order:
                continue
            ii.append(a)
            jj.append(b)
            kk.append(index[tuple(x + y for x, y in zip(ea, eb))])
    # pairs grouped by output slot: slot k owns pairs starts[k]:starts[k+1]
    kk = np.array(kk, dtype=np.int64)
    by_slot = np.argsort(kk, kind="stable")
    ii = np.array(ii, dtype=np.int64)[by_slot]
    jj = np.array(jj, dtype=np.int64)[by_slot]
    starts = np.searchsorted(kk[by_slot], np.arange(len(exps) + 1)).astype(np.int64)
    # conj swaps holomorphic and antiholomorphic exponents
    half = nvar // 2
    conj_perm = np.array([index[e[half:] + e[:half]] for e in exps])
    fact = np.array([math.prod(math.factorial(x) for x in e) for e in exps], dtype=float)
    return exps, index, degree, ii, jj, starts, conj_perm, fact


class Jet:
    """Order-truncated Taylor expansion with optional batch axes.

    Parameters
    ----------
    coeffs : ndarray, shape (..., ncoef)
        Taylor coefficients (not derivatives) in the monomial order of the
        internal tables.
    m : int
        Number of complex coordinates; there are ``2m`` expansion variables.
    order : int
        Truncation order.
    """

    __slots__ = ("coeffs", "m", "order")
    __array_priority__ = 100

    def __init__(self, coeffs, m: int, order: int = MAX_ORDER):
        if not 0 <= order <= MAX_ORDER:
            raise JetError(f"order must be in [0, {MAX_ORDER}], got {order}")
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.m = m
        self.order = order
        if self.coeffs.shape[-1] != len(_tables(2 * m, order)[0]):
            raise JetError("coefficient count does not match (m, order)")

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, m: int, order: int = MAX_ORDER) -> "Jet":
        value = np.asarray(value, dtype=complex)
        ncoef = len(_tables(2 * m, order)[0])
        c = np.zeros(value.shape + (ncoef,), dtype=complex)
        c[..., 0] = value
        return cls(c, m, order)

    @property
    def ncoef(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def _like(self, coeffs) -> "Jet":
        return Jet(coeffs, self.m, self.order)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.m != self.m or other.order != self.order:
                raise JetError("jets live on different frames or orders")
            return other
        return Jet.constant(other, self.m, self.order)

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            return self._like(self.coeffs + self._coerce(other).coeffs)
        c = self.coeffs.copy()
        c[..., 0] += other
        return self._like(c)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self._like(self.coeffs * np.asarray(other)[..., None])
        other = self._coerce(other)
        return self._like(_mul_coeffs(self.coeffs, other.coeffs, self.m, self.order))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self._like(self.coeffs / np.asarray(other)[..., None])
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(np.ones(self.batch_shape), self.m, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        return self.pow(float(p))

    # -- composition with univariate functions ------------------------
    def _compose(self, derivs: Sequence[np.ndarray]) -> "Jet":
        """f(self) given ``derivs[k] = f^(k)(value)`` for k = 0..order."""
        delta = self.coeffs.copy()
        delta[..., 0] = 0.0
        delta = self._like(delta)
        out = np.zeros_like(self.coeffs)
        out[..., 0] = derivs[0]
        power = None
        for k in range(1, self.order + 1):
            power = delta if power is None else power * delta
            out += power.coeffs * (derivs[k] / math.factorial(k))[..., None]
        return self._like(out)

    def _real_positive_value(self, what: str) -> np.ndarray:
        val = self.value
        if np.any(np.abs(val.imag) > REAL_TOL * np.maximum(1.0, np.abs(val.real))):
            raise JetError(f"{what}: value is not real")
        x = val.real
        if np.any(x <= 0):
            raise JetError(f"{what}: non-positive value {x.min():.3e} (off E^o or degenerate metric)")
        return x

    def reciprocal(self) -> "Jet":
        x = self.value
        if np.any(np.abs(x) < 1e-300):
            raise JetError("division by a jet with zero value")
        d = [x**-1]
        for k in range(1, self.order + 1):
            d.append(d[-1] * (-k) / x)
        return self._compose(d)

    def log(self) -> "Jet":
        x = self._real_positive_value("log")
        d = [np.log(x).astype(complex)]
        for k in range(1, self.order + 1):
            d.append((-1) ** (k - 1) * math.factorial(k - 1) / x**k + 0j)
        return self._compose(d)

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self._compose([e] * (self.order + 1))

    def pow(self, p: float) -> "Jet":
        x = self._real_positive_value("pow")
        d = []
        coef = 1.0
        for k in range(self.order + 1):
            d.append(coef * x ** (p - k) + 0j)
            coef *= p - k
        return self._compose(d)

    def conj(self) -> "Jet":
        perm = _tables(2 * self.m, self.order)[6]
        return self._like(np.conj(self.coeffs[..., perm]))

    def re(self) -> "Jet":
        return (self + self.conj()) * 0.5

    # -- extraction ---------------------------------------------------
    def wirtinger(self, holo: Sequence[int] = (), anti: Sequence[int] = ()) -> np.ndarray:
        """Mixed Wirtinger derivative d^|holo| d^|anti| f / du^holo dubar^anti."""
        if len(holo) + len(anti) > self.order:
            raise JetError(f"derivative order {len(holo) + len(anti)} exceeds jet order {self.order}")
        e = [0] * (2 * self.m)
        for a in holo:
            e[a] += 1
        for b in anti:
            e[self.m + b] += 1
        exps, index, *_ , fact = _tables(2 * self.m, self.order)
        k = index[tuple(e)]
        return self.coeffs[..., k] * fact[k]

    def tensor(self, nholo: int, nanti: int) -> np.ndarray:
        """All derivatives with ``nholo`` holomorphic and ``nanti`` anti indices.

        Returns shape ``batch + (m,)*nholo + (m,)*nanti``.
        """
        if nholo + nanti > self.order:
            raise JetError(f"derivative order {nholo + nanti} exceeds jet order {self.order}")
        idx, w = _tensor_index(self.m, self.order, nholo, nanti)
        out = self.coeffs[..., idx] * w
        return out.reshape(self.batch_shape + (self.m,) * (nholo + nanti))

    def real_derivative(self, counts: Sequence[int]) -> np.ndarray:
        """Partial derivative in the real enumeration (Re u^0, Im u^0, Re u^1, ...).

        Uses d/dx = d/du + d/dubar and d/dy = i (d/du - d/dubar).
        """
        if len(counts) != 2 * self.m:
            raise JetError("need one count per real coordinate")
        poly = {(): 1.0 + 0j}  # sorted tuple of signed slots -> coefficient
        for a in range(self.m):
            for kind, cnt in (("x", counts[2 * a]), ("y", counts[2 * a + 1])):
                for _ in range(cnt):
                    new = {}
                    for key, c in poly.items():
                        terms = [((a, 0), 1.0), ((a, 1), 1.0)] if kind == "x" else [((a, 0), 1j), ((a, 1), -1j)]
                        for slot, f in terms:
                            k2 = tuple(sorted(key + (slot,)))
                            new[k2] = new.get(k2, 0) + c * f
                    poly = new
        total = 0
        for key, c in poly.items():
            holo = [a for a, s in key if s == 0]
            anti = [a for a, s in key if s == 1]
            total = total + c * self.wirtinger(holo, anti)
        return total

    def __getitem__(self, item) -> "Jet":
        if not isinstance(item, tuple):
            item = (item,)
        return self._like(self.coeffs[item + (slice(None),)])

    def __repr__(self):
        return f"Jet(m={self.m}, order={self.order}, batch={self.batch_shape})"


@lru_cache(maxsize=None)
def _tensor_index(m: int, order: int, nholo: int, nanti: int):
    exps, index, *_ , fact = _tables(2 * m, order)
    idx = np.empty((m,) * (nholo + nanti), dtype=np.int64)
    w = np.empty(idx.shape)
    for pos in np.ndindex(*idx.shape):
        e = [0] * (2 * m)
        for a in pos[:nholo]:
            e[a] += 1
        for b in pos[nholo:]:
            e[m + b] += 1
        k = index[tuple(e)]
        idx[pos] = k
        w[pos] = fact[k]
    return idx.ravel(), w.ravel()


def _mul_coeffs(a: np.ndarray, b: np.ndarray, m: int, order: int) -> np.ndarray:
    *_, ii, jj, starts, _perm, _fact = _tables(2 * m, order)
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    a2 = np.ascontiguousarray(a.reshape(-1, shape[-1]))
    b2 = np.ascontiguousarray(b.reshape(-1, shape[-1]))
    out = np.empty_like(a2)
    _mul_kernel(a2, b2, ii, jj, starts, out)
    return out.reshape(shape)


@numba.njit(cache=True)
def _mul_kernel(a, b, ii, jj, starts, out):
    for s in range(a.shape[0]):
        for c in range(out.shape[1]):
            acc = 0j
            for p in range(starts[c], starts[c + 1]):
                acc += a[s, ii[p]] * b[s, jj[p]]
            out[s, c] = acc


def seed(frame: CoordinateFrame, basepoint, order: int = MAX_ORDER) -> list[Jet]:
    """Coordinate jets ``u^a`` at ``basepoint`` (shape ``batch + (m,)``).

    Conjugate coordinates are obtained with :meth:`Jet.conj`.
    """
    bp = np.asarray(basepoint, dtype=complex)
    if bp.shape[-1] != frame.m:
        raise JetError(f"basepoint has {bp.shape[-1]} entries, frame needs n + r = {frame.m}")
    exps, index, *_ = _tables(2 * frame.m, order)
    out = []
    for a in range(frame.m):
        c = np.zeros(bp.shape[:-1] + (len(exps),), dtype=complex)
        c[..., 0] = bp[..., a]
        if order >= 1:
            e = [0] * (2 * frame.m)
            e[a] = 1
            c[..., index[tuple(e)]] = 1.0
        out.append(Jet(c, frame.m, order))
    return out


# dispatching helpers so model code runs on jets and on plain arrays alike
def log(x):
    return x.log() if isinstance(x, Jet) else np.log(x)


def exp(x):
    return x.exp() if isinstance(x, Jet) else np.exp(x)


def power(x, p):
    return x.pow(p) if isinstance(x, Jet) else np.power(x, p)


def conj(x):
    return x.conj() if isinstance(x, Jet) else np.conj(x)
