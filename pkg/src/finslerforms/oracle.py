"""Independent ground truth: finite differences, closed-form Chern data, plain Monte Carlo.

Nothing here touches the jet engine or the quadrature code, so agreement
with those is evidence rather than a tautology.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

EPS = np.finfo(float).eps
TWO_PI = 2.0 * math.pi


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class FDPlan:
    """Central differences of accuracy order ``accuracy`` with Richardson on top.

    ``step`` is a floor: a derivative of total order k uses
    ``max(step, 2 eps^(1/(k + accuracy)))``, which balances truncation against
    rounding for unit-scale functions.  A fixed 1e-3 step leaves fourth
    derivatives dominated by rounding noise.
    """

    step: float = 1e-3
    accuracy: int = 4
    richardson_levels: int = 2
    rtol: float = 1e-5

    def step_for(self, k: int) -> float:
        return max(self.step, 2.0 * EPS ** (1.0 / (k + self.accuracy)))


@lru_cache(maxsize=None)
def central_weights(deriv: int, accuracy: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the central stencil for ``d^deriv/dx^deriv``."""
    if deriv == 0:
        return np.zeros(1), np.ones(1)
    p = (deriv + 1) // 2 - 1 + accuracy // 2
    offsets = np.arange(-p, p + 1, dtype=float)
    size = offsets.size
    vander = np.vander(offsets, size, increasing=True).T
    rhs = np.zeros(size)
    rhs[deriv] = math.factorial(deriv)
    weights = np.linalg.solve(vander, rhs)
    return offsets, weights


def _real_partial(f, x0: np.ndarray, counts: Sequence[int], h: float, accuracy: int) -> complex:
    """Mixed real partial derivative by a tensor product of 1-D stencils."""
    active = [(j, c) for j, c in enumerate(counts) if c]
    if not active:
        return complex(f(x0[None])[0])
    stencils = [central_weights(c, accuracy) for _, c in active]
    grids = list(itertools.product(*[range(len(s[0])) for s in stencils]))
    pts = np.repeat(x0[None], len(grids), axis=0)
    wts = np.ones(len(grids))
    for row, combo in enumerate(grids):
        for (j, _), (off, w), idx in zip(active, stencils, combo):
            pts[row, j] += off[idx] * h
            wts[row] *= w[idx]
    keep = wts != 0
    vals = f(pts[keep])
    total_order = sum(c for _, c in active)
    return complex(np.dot(wts[keep], vals) / h**total_order)


def fd_wirtinger(f: Callable, point, holo: Sequence[int], anti: Sequence[int], plan: FDPlan = FDPlan()):
    """Finite-difference Wirtinger derivative; returns (value, error estimate).

    ``f`` maps complex points of shape (N, m) to values (N,).  ``holo`` and
    ``anti`` list coordinate indices (repeats allowed).  Uses
    ``d/dw = (d/dx - i d/dy)/2`` and ``d/dwbar = (d/dx + i d/dy)/2``.
    """
    point = np.asarray(point, dtype=complex)
    m = point.size
    idx = [(a, -1j) for a in holo] + [(a, 1j) for a in anti]
    k = len(idx)
    if k > 4:
        raise OracleError("fd_wirtinger supports total order <= 4")
    x0 = np.concatenate([[point[a].real, point[a].imag] for a in range(m)])

    def freal(x):
        return np.asarray(f(x[:, 0::2] + 1j * x[:, 1::2]), dtype=complex)

    def at_step(h):
        total = 0.0 + 0.0j
        cache: dict[tuple, complex] = {}
        for choice in itertools.product((0, 1), repeat=k):
            coef = 1.0 + 0.0j
            counts = [0] * (2 * m)
            for (a, s), c in zip(idx, choice):
                counts[2 * a + c] += 1
                coef *= 0.5 * (s if c else 1.0)
            key = tuple(counts)
            if key not in cache:
                cache[key] = _real_partial(freal, x0, counts, h, plan.accuracy)
            total += coef * cache[key]
        return total

    h = plan.step_for(k)
    if h < 1e-12:
        raise OracleError("finite-difference step underflow")
    levels = [at_step(h / 2**i) for i in range(max(1, plan.richardson_levels))]
    if len(levels) == 1:
        return levels[0], math.nan
    ratio = 2.0**plan.accuracy
    best = (ratio * levels[-1] - levels[-2]) / (ratio - 1)
    return best, abs(levels[-1] - levels[-2]) / (ratio - 1)


# ---------------------------------------------------------------------------
# closed-form Chern-Weil data for sums of line bundles


@dataclass(frozen=True)
class LineBundleCW:
    """Chern data of a sum of line bundles with Fubini-Study weights.

    ``degrees[i][alpha]`` is the degree of the i-th line along the alpha-th CP^1
    factor.  With ``ell_alpha = omega_alpha / 2pi`` the first Chern form of
    line i is ``x_i = sum_alpha degrees[i][alpha] ell_alpha``, and the total Chern
    form is ``prod_i (1 + x_i)``.
    """

    degrees: tuple

    @property
    def n(self) -> int:
        return len(self.degrees[0])

    @property
    def r(self) -> int:
        return len(self.degrees)

    @property
    def c1_number(self) -> int:
        """int c_1 on CP^1; on CP^1 x CP^1 the coefficients along ell_1, ell_2 are summed."""
        return int(sum(sum(row) for row in self.degrees))

    @property
    def c2_number(self) -> int:
        """int c_2 on CP^1 x CP^1 (ell_1 ell_2 integrates to 1, ell_alpha^2 = 0)."""
        if self.n != 2:
            raise OracleError("c_2 number is defined here for CP^1 x CP^1")
        total = 0
        for i, j in itertools.combinations(range(self.r), 2):
            a, b = self.degrees[i], self.degrees[j]
            total += a[0] * b[1] + a[1] * b[0]
        return total

    @property
    def degree(self) -> float:
        """int c_1 ^ omega^{n-1} with omega the FS form of volume 2pi per factor."""
        if self.n == 1:
            return float(self.c1_number)
        return TWO_PI * self.c1_number

    @property
    def lam(self) -> float:
        """2 pi n / vol * degree / r."""
        vol = math.factorial(self.n) * TWO_PI**self.n
        return TWO_PI * self.n / vol * self.degree / self.r

    def c1_density(self, z) -> np.ndarray:
        """h[..., alpha, beta] with c_1 = sqrt(-1) h dz^alpha ^ dzbar^beta."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        prof = (1.0 + np.abs(z) ** 2) ** -2 / TWO_PI
        coef = np.sum(np.asarray(self.degrees, dtype=float), axis=0)
        return (prof * coef)[..., :, None] * np.eye(self.n)

    def c2_over_omega2(self, z) -> np.ndarray:
        """c_2 / omega^2 on CP^1 x CP^1 (constant: c2_number / (8 pi^2) per unit volume ratio)."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        # ell_1 ell_2 = omega_1 omega_2 / 4pi^2 and omega^2 = 2 omega_1 omega_2
        return np.full(z.shape[:-1], self.c2_number / (8 * math.pi**2))

    def c1sq_over_omega2(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        coef = np.sum(np.asarray(self.degrees, dtype=float), axis=0)
        return np.full(z.shape[:-1], 2 * coef[0] * coef[1] / (8 * math.pi**2))


def line_bundle_cw(degrees) -> LineBundleCW:
    table = tuple(tuple(int(x) for x in (row if isinstance(row, (list, tuple)) else [row])) for row in degrees)
    if len({len(row) for row in table}) != 1:
        raise OracleError("ragged degree table")
    return LineBundleCW(table)


# ---------------------------------------------------------------------------
# plain Monte Carlo


def _projective_samples(rng, dim: int, count: int):
    """Chart points of CP^dim from uniform sphere points; returns (w, Lebesgue density)."""
    x = rng.normal(size=(count, dim + 1)) + 1j * rng.normal(size=(count, dim + 1))
    w = x[:, 1:] / x[:, :1]
    dens = math.factorial(dim) / math.pi**dim * (1 + np.sum(np.abs(w) ** 2, axis=-1)) ** (-(dim + 1))
    return w, dens


def brute_integrate(integrand: Callable, region: str, dim: int, samples: int, seed: int):
    """Monte Carlo integral of a Lebesgue density over a chart; returns (value, 3 sigma).

    ``region='projective'`` samples the chart of CP^dim (a fiber P(E_z));
    ``region='product'`` samples ``dim`` independent CP^1 charts (the base).
    """
    if samples < 2:
        raise OracleError("need at least two samples")
    rng = np.random.default_rng(seed)
    if region == "projective":
        w, dens = _projective_samples(rng, dim, samples)
    elif region == "product":
        cols, dens = [], np.ones(samples)
        for _ in range(dim):
            wa, da = _projective_samples(rng, 1, samples)
            cols.append(wa[:, 0])
            dens = dens * da
        w = np.stack(cols, axis=-1)
    else:
        raise OracleError(f"unknown region {region!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(integrand(w), dtype=complex) / dens
    if not np.all(np.isfinite(vals)):
        raise OracleError("integrand variance overflow (non-finite sample)")
    mean = vals.mean()
    sigma = float(np.std(vals) / math.sqrt(samples))
    return complex(mean), 3 * sigma
