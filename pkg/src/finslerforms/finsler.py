"""Finsler metric families and the pointwise curvature objects built from them.

Every object here comes out of one Taylor jet of ``G`` at ``(z, v)``:
the Levi matrix ``G_{i jbar}``, the Chern connection pieces ``Gamma`` and
``gamma``, the curvature tensor ``K_{i jbar alpha betabar}``, the forms
``Psi``, ``Xi = (i/2pi) ddbar log G`` and ``omega_FS``, and the curvature
matrix ``Theta`` of the induced Hermitian metric on the pulled back bundle.

Index conventions: ``H[i, j] = G_{i jbar}`` and ``Hinv = H^{-1}``, so that
``G^{jbar k} = Hinv[j, k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .exterior import Form, FormMatrix, delta_basis
from .jets import CoordinateFrame, Jet

TWO_PI = 2.0 * math.pi
PD_REL_TOL = 1e-10
FLAT_TOL = 1e-8


class MetricError(ValueError):
    """The metric is not strongly pseudo-convex (or not defined) at a point."""

    def __init__(self, message: str, eigenvalue: float | None = None, witness=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.witness = witness


# ---------------------------------------------------------------------------
# metric families


def _line_factor(z, zb, degrees):
    """prod_alpha (1 + |z^alpha|^2)^(-degrees[alpha]); scalar 1.0 if trivial."""
    out = 1.0
    for a, d in enumerate(degrees):
        if d == 0:
            continue
        out = out * J.power(1.0 + z[a] * zb[a], -float(d))
    return out


def _as_degree_table(degrees, n: int) -> tuple[tuple[int, ...], ...]:
    table = []
    for d in degrees:
        row = tuple(int(x) for x in (d if isinstance(d, (list, tuple, np.ndarray)) else [d]))
        if len(row) != n:
            raise ValueError(f"degree entry {d!r} does not have n={n} components")
        table.append(row)
    return tuple(table)


@dataclass(frozen=True)
class MetricModel:
    """A Finsler metric ``G(z, v)`` on a trivialised chart of ``E``.

    Subclasses implement :meth:`G`, which must accept lists of jets or of
    plain complex arrays for ``z, zbar, v, vbar``.
    """

    n: int
    r: int

    family = "Custom"
    hermitian = False
    z_independent = False

    @property
    def frame(self) -> CoordinateFrame:
        return CoordinateFrame(self.n, self.r)

    def G(self, z, zb, v, vb):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"family": self.family, "n": self.n, "r": self.r, **self.params()}

    def split(self, points):
        pts = np.asarray(points, dtype=complex)
        z = [pts[..., a] for a in range(self.n)]
        v = [pts[..., self.n + i] for i in range(self.r)]
        return z, v

    def value(self, points) -> np.ndarray:
        """Plain numerical evaluation at complex points of shape (..., n + r)."""
        z, v = self.split(points)
        g = self.G(z, [np.conj(x) for x in z], v, [np.conj(x) for x in v])
        return np.broadcast_to(np.asarray(g, dtype=complex), np.shape(points)[:-1])

    def jet(self, points, order: int = J.MAX_ORDER) -> Jet:
        coords = J.seed(self.frame, points, order)
        z, v = coords[: self.n], coords[self.n :]
        g = self.G(z, [x.conj() for x in z], v, [x.conj() for x in v])
        if not isinstance(g, Jet):
            g = Jet.constant(np.broadcast_to(g, np.shape(points)[:-1]), self.frame.m, order)
        return g


@dataclass(frozen=True)
class HermitianDiagonal(MetricModel):
    """``G = sum_i prod_alpha (1 + |z^alpha|^2)^(-a_{i alpha}) |v^i|^2``.

    The bundle is ``O(a_1) + ... + O(a_r)`` over CP^1 (n = 1) or the sum of
    ``O(a_i, b_i)`` over CP^1 x CP^1 (n = 2), with Fubini-Study weights.
    """

    degrees: tuple = ()
    family = "HermitianDiagonal"
    hermitian = True

    def __post_init__(self):
        object.__setattr__(self, "degrees", _as_degree_table(self.degrees, self.n))
        if len(self.degrees) != self.r:
            raise ValueError("need one degree entry per fiber coordinate")

    @property
    def z_independent(self):
        return all(d == 0 for row in self.degrees for d in row)

    def weights(self, z, zb):
        return [_line_factor(z, zb, row) for row in self.degrees]

    def G(self, z, zb, v, vb):
        out = 0.0
        for h, vi, vbi in zip(self.weights(z, zb), v, vb):
            out = out + h * (vi * vbi)
        return out

    def params(self):
        return {"degrees": [list(row) for row in self.degrees]}


@dataclass(frozen=True)
class FinslerPerturbed(MetricModel):
    """``G = G_h + eps * w(z) * Q / G_h`` with ``Q = sum_i (h_i |v^i|^2)^2``.

    ``G_h`` is the :class:`HermitianDiagonal` metric with the same degrees and
    ``w = prod_alpha (1 + |z^alpha|^2)^(-tilt)``.  With ``tilt = 0`` the metric
    is a fixed norm read through the diagonal Hermitian frame, for which
    ``c_1(E, G)`` and ``C_1(E, G)`` coincide pointwise; ``tilt != 0`` breaks that.
    Homogeneous of bidegree (1, 1) in ``v``; not Hermitian when eps > 0 and
    r >= 2.  Admissible eps is gated numerically by :func:`pseudoconvexity_scan`.
    """

    degrees: tuple = ()
    eps: float = 0.1
    tilt: int = 0
    family = "FinslerPerturbed"

    def __post_init__(self):
        object.__setattr__(self, "degrees", _as_degree_table(self.degrees, self.n))
        if len(self.degrees) != self.r:
            raise ValueError("need one degree entry per fiber coordinate")

    @property
    def hermitian(self):
        return self.eps == 0 or self.r == 1

    @property
    def z_independent(self):
        return self.tilt == 0 and all(d == 0 for row in self.degrees for d in row)

    @property
    def core(self) -> HermitianDiagonal:
        return HermitianDiagonal(self.n, self.r, self.degrees)

    def G(self, z, zb, v, vb):
        squares = [h * (vi * vbi) for h, vi, vbi in zip(self.core.weights(z, zb), v, vb)]
        gh = 0.0
        q = 0.0
        for s in squares:
            gh = gh + s
            q = q + s * s
        if self.eps == 0:
            return gh
        if self.tilt:
            q = q * _line_factor(z, zb, [self.tilt] * self.n)
        return gh + self.eps * q / gh

    def params(self):
        return {"degrees": [list(row) for row in self.degrees], "eps": self.eps, "tilt": self.tilt}


@dataclass(frozen=True)
class TensorByLine(MetricModel):
    """``G~ = G * h_L(z)`` with ``h_L = prod (1 + |z^alpha|^2)^(-d_alpha)``."""

    inner: MetricModel = None
    line_degrees: tuple = ()
    family = "TensorByLine"

    def __post_init__(self):
        object.__setattr__(self, "line_degrees", tuple(int(d) for d in self.line_degrees))
        if len(self.line_degrees) != self.n or self.inner.n != self.n or self.inner.r != self.r:
            raise ValueError("TensorByLine: dimension mismatch")

    @property
    def hermitian(self):
        return self.inner.hermitian

    @property
    def z_independent(self):
        return self.inner.z_independent and not any(self.line_degrees)

    def G(self, z, zb, v, vb):
        return self.inner.G(z, zb, v, vb) * _line_factor(z, zb, self.line_degrees)

    def params(self):
        return {"inner": self.inner.describe(), "line_degrees": list(self.line_degrees)}


@dataclass(frozen=True)
class Restricted(MetricModel):
    """``G`` read on the coordinate subbundle spanned by ``indices``."""

    inner: MetricModel = None
    indices: tuple = ()
    family = "Restricted"

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(self.indices) != self.r or self.inner.n != self.n:
            raise ValueError("Restricted: dimension mismatch")
        if len(set(self.indices)) != len(self.indices) or not all(0 <= i < self.inner.r for i in self.indices):
            raise ValueError("Restricted: invalid fiber indices")

    @property
    def hermitian(self):
        return self.inner.hermitian

    @property
    def z_independent(self):
        return self.inner.z_independent

    def G(self, z, zb, v, vb):
        zero = 0.0 * v[0]
        full = [zero] * self.inner.r
        fullb = [zero] * self.inner.r
        for slot, i in enumerate(self.indices):
            full[i] = v[slot]
            fullb[i] = vb[slot]
        return self.inner.G(z, zb, full, fullb)

    def params(self):
        return {"inner": self.inner.describe(), "indices": list(self.indices)}


@dataclass(frozen=True)
class Custom(MetricModel):
    """In-code hook: ``fn(z, zbar, v, vbar)`` on lists of jets or arrays."""

    fn: Callable = None
    name: str = "custom"
    is_hermitian: bool = False
    family = "Custom"

    @property
    def hermitian(self):
        return self.is_hermitian

    def G(self, z, zb, v, vb):
        return self.fn(z, zb, v, vb)

    def params(self):
        return {"name": self.name}


def flat_model(r: int = 2, n: int = 1) -> HermitianDiagonal:
    return HermitianDiagonal(n, r, [[0] * n] * r)


def non_homogeneous_control(n: int = 1, r: int = 2) -> Custom:
    """Negative control: a flat metric plus ``|v^1|^3`` (violates homogeneity)."""

    def fn(z, zb, v, vb):
        g = 0.0
        for vi, vbi in zip(v, vb):
            g = g + vi * vbi
        return g + J.power(v[0] * vb[0], 1.5)

    return Custom(n, r, fn=fn, name="flat+|v1|^3")


# ---------------------------------------------------------------------------
# curvature objects


def _points(z, v):
    z = np.asarray(z, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if z.ndim == 0:
        z = z[None]
    batch = np.broadcast_shapes(z.shape[:-1], v.shape[:-1])
    return np.concatenate(
        [np.broadcast_to(z, batch + z.shape[-1:]), np.broadcast_to(v, batch + v.shape[-1:])], axis=-1
    )


def _check_levi(levi: np.ndarray):
    eig, vecs = np.linalg.eigh(levi)
    scale = np.abs(np.trace(levi, axis1=-2, axis2=-1))
    bad = eig[..., 0] <= PD_REL_TOL * scale
    if np.any(bad):
        idx = np.unravel_index(np.argmin(eig[..., 0] / np.maximum(scale, 1e-300)), bad.shape)
        raise MetricError(
            f"Levi matrix not positive-definite: smallest eigenvalue {eig[idx][0]:.3e}",
            eigenvalue=float(eig[idx][0]),
            witness=vecs[idx][:, 0],
        )


class CurvatureBundle:
    """All pointwise curvature data of ``G`` at a batch of points ``(z, v)``.

    Attributes are computed lazily from one jet of ``G`` (order 4 gives
    everything; order 3 suffices up to ``omega_fs``, order 2 for ``levi`` and
    ``xi``).  Leading axes of ``z`` and ``v`` broadcast into the batch shape.
    """

    def __init__(self, model: MetricModel, z, v, order: int = J.MAX_ORDER, check: bool = True):
        self.model = model
        self.frame = model.frame
        self.points = _points(z, v)
        self.v = self.points[..., model.n :]
        if np.any(np.all(np.abs(self.v) == 0, axis=-1)):
            raise MetricError("v = 0 is not in E^o")
        self.jet = model.jet(self.points, order)
        G = self.jet.value
        if np.any(np.abs(G.imag) > 1e-10 * np.maximum(1, np.abs(G.real))) or np.any(G.real <= 0):
            raise MetricError("G is not real positive at some point")
        self.G = G.real
        if check:
            _check_levi(self.levi)

    # raw derivative blocks -------------------------------------------
    @cached_property
    def _g2(self):
        return self.jet.tensor(1, 1)

    @cached_property
    def levi(self) -> np.ndarray:
        n = self.model.n
        return self._g2[..., n:, n:]

    @cached_property
    def levi_inv(self) -> np.ndarray:
        return np.linalg.inv(self.levi)

    @cached_property
    def dH(self) -> np.ndarray:
        """dH[..., A, i, j] = d G_{i jbar} / du^A over all holomorphic u."""
        n = self.model.n
        return self.jet.tensor(2, 1)[..., :, n:, n:]

    @cached_property
    def dbH(self) -> np.ndarray:
        """dbH[..., B, i, j] = d G_{i jbar} / dubar^B."""
        n = self.model.n
        return np.moveaxis(self.jet.tensor(1, 2)[..., n:, n:, :], -1, -3)

    @cached_property
    def ddH(self) -> np.ndarray:
        """ddH[..., A, B, i, j] = d^2 G_{i jbar} / du^A dubar^B."""
        n = self.model.n
        g4 = self.jet.tensor(2, 2)[..., :, n:, n:, :]  # (A, i, j, B)
        return np.moveaxis(g4, -1, -3)  # (A, B, i, j)

    # connection ---------------------------------------------------------
    @cached_property
    def gamma_h(self) -> np.ndarray:
        """Gamma^k_{i alpha}, indexed [..., k, i, alpha]."""
        n = self.model.n
        return np.einsum("...aij,...jk->...kia", self.dH[..., :n, :, :], self.levi_inv)

    @cached_property
    def gamma_v(self) -> np.ndarray:
        """gamma^k_{i l}, indexed [..., k, i, l]."""
        n = self.model.n
        return np.einsum("...lij,...jk->...kil", self.dH[..., n:, :, :], self.levi_inv)

    # curvature ---------------------------------------------------------
    @cached_property
    def _X(self) -> np.ndarray:
        """X[A, B] = ddH[A, B] - dH[A] Hinv dbH[B] (r x r blocks)."""
        corr = np.einsum("...ail,...lk,...bkj->...abij", self.dH, self.levi_inv, self.dbH)
        return self.ddH - corr

    @cached_property
    def K(self) -> np.ndarray:
        """K_{i jbar alpha betabar}, indexed [..., i, j, alpha, beta]."""
        n = self.model.n
        return -np.moveaxis(self._X[..., :n, :n, :, :], (-4, -3), (-2, -1))

    @cached_property
    def psi_coeffs(self) -> np.ndarray:
        """psi[alpha, beta] = K_{i jbar alpha betabar} v^i vbar^j / G."""
        return np.einsum("...ijab,...i,...j->...ab", self.K, self.v, np.conj(self.v)) / self.G[..., None, None]

    @cached_property
    def psi(self) -> Form:
        n = self.model.n
        return Form.one_one(self.frame, 1j * self.psi_coeffs, range(n), range(n))

    @cached_property
    def logG_hessian(self) -> np.ndarray:
        return self.jet.log().tensor(1, 1)

    @cached_property
    def xi(self) -> Form:
        m = self.frame.m
        return Form.one_one(self.frame, (1j / TWO_PI) * self.logG_hessian, range(m), range(m))

    @cached_property
    def omega_fs_delta(self) -> Form:
        """omega_FS written over delta v, delta vbar (bits of dv reused)."""
        n, m = self.model.n, self.frame.m
        return Form.one_one(self.frame, (1j / TWO_PI) * self.logG_hessian[..., n:, n:], range(n, m), range(n, m))

    @cached_property
    def omega_fs(self) -> Form:
        return delta_basis(self.omega_fs_delta, self.gamma_h, self.v, "from_delta")

    @cached_property
    def theta(self) -> FormMatrix:
        """Theta^k_i = dbar theta^k_i, stored as entries[i][k]."""
        m, r = self.frame.m, self.model.r
        coef = -np.einsum("...abij,...jk->...ikab", self._X, self.levi_inv)
        return FormMatrix(
            [[Form.one_one(self.frame, coef[..., i, k, :, :], range(m), range(m)) for k in range(r)] for i in range(r)]
        )


def evaluate(model: MetricModel, z, v, order: int = J.MAX_ORDER, check: bool = True) -> CurvatureBundle:
    return CurvatureBundle(model, z, v, order=order, check=check)


# ---------------------------------------------------------------------------
# validators


def euler_residuals(model: MetricModel, z, v) -> dict[str, np.ndarray]:
    """Homogeneity identities of G, each residual divided by G."""
    pts = _points(z, v)
    n, r = model.n, model.r
    vv = pts[..., n:]
    vb = np.conj(vv)
    jet = model.jet(pts, order=3)
    G = jet.value.real
    g1 = jet.tensor(1, 0)[..., n:]
    g1b = jet.tensor(0, 1)[..., n:]
    g2 = jet.tensor(1, 1)[..., n:, n:]
    g2h = jet.tensor(2, 0)[..., n:, n:]
    g3 = jet.tensor(2, 1)[..., n:, n:, n:]  # (k, i, j): d_k G_{i jbar}
    g3b = jet.tensor(1, 2)[..., n:, n:, n:]  # (i, j, k): G_{i jbar kbar}
    out = {
        "G_i v^i - G": np.abs(np.einsum("...i,...i->...", g1, vv) - G),
        "G_jbar vbar^j - G": np.abs(np.einsum("...j,...j->...", g1b, vb) - G),
        "G_ijbar v^i vbar^j - G": np.abs(np.einsum("...ij,...i,...j->...", g2, vv, vb) - G),
        "G_ij v^i": np.abs(np.einsum("...ij,...i->...j", g2h, vv)).max(axis=-1),
        "G_ijbark v^i": np.abs(np.einsum("...kij,...i->...jk", g3, vv)).reshape(G.shape + (-1,)).max(axis=-1),
        "G_ijbarkbar vbar^j": np.abs(np.einsum("...ijk,...j->...ik", g3b, vb)).reshape(G.shape + (-1,)).max(axis=-1),
    }
    return {k: val / np.abs(G) for k, val in out.items()}


def connection_residuals(model: MetricModel, z, v, lam) -> dict[str, np.ndarray]:
    """gamma v = 0 on both slots and scale invariance of Gamma."""
    b = evaluate(model, z, v, order=3)
    lam = np.asarray(lam, dtype=complex)
    bl = evaluate(model, z, np.asarray(v) * lam[..., None], order=3)
    scale = np.maximum(1.0, np.abs(b.gamma_h).reshape(b.G.shape + (-1,)).max(axis=-1))
    flat = lambda a: np.abs(a).reshape(b.G.shape + (-1,)).max(axis=-1)
    return {
        "gamma^k_il v^i": flat(np.einsum("...kil,...i->...kl", b.gamma_v, b.v)),
        "gamma^k_il v^l": flat(np.einsum("...kil,...l->...ki", b.gamma_v, b.v)),
        "Gamma(z, lam v) - Gamma(z, v)": flat(bl.gamma_h - b.gamma_h) / scale,
    }


def decomposition_residual(model: MetricModel, z, v) -> np.ndarray:
    """max |Xi - (-Psi / 2pi + omega_FS)| over coefficients, per point."""
    b = evaluate(model, z, v)
    diff = b.xi - (b.psi * (-1.0 / TWO_PI) + b.omega_fs)
    if not diff.terms:
        return np.zeros(b.G.shape)
    return np.max(np.stack([np.abs(np.broadcast_to(c, b.G.shape)) for c in diff.terms.values()]), axis=0)


def theta_psi_residual(model: MetricModel, z, v) -> np.ndarray:
    """|sqrt(-1) Theta_{i jbar} v^i vbar^j / G (horizontal block) - Psi| per point."""
    b = evaluate(model, z, v)
    n = model.n
    coef = -np.einsum("...abij,...jk->...ikab", b._X, b.levi_inv)
    lowered = np.einsum("...ikab,...kj->...ijab", coef, b.levi)[..., :n, :n]
    contracted = np.einsum("...ijab,...i,...j->...ab", lowered, b.v, np.conj(b.v)) / b.G[..., None, None]
    return np.abs(contracted - b.psi_coeffs).reshape(b.G.shape + (-1,)).max(axis=-1)


def conjugate_symmetry_residual(model: MetricModel, z, v) -> np.ndarray:
    """max |G_{i jbar} - conj G_{j ibar}| and |G_{i jbar a bbar} - conj G_{j ibar b abar}| per point."""
    b = evaluate(model, z, v, check=False)
    g2 = b.jet.tensor(1, 1)
    g4 = b.jet.tensor(2, 2)  # (i, a, j, b) with i, a holomorphic
    r2 = np.abs(g2 - np.conj(np.swapaxes(g2, -1, -2)))
    r4 = np.abs(g4 - np.conj(np.moveaxis(g4, (-4, -3, -2, -1), (-2, -1, -4, -3))))
    shape = b.G.shape + (-1,)
    return np.maximum(r2.reshape(shape).max(axis=-1), r4.reshape(shape).max(axis=-1))


@dataclass(frozen=True)
class SamplePlan:
    """Seeded samples of base points in a chart disk and unit fiber vectors."""

    count: int = 100
    seed: int = 0
    radius: float = 2.0

    def draw(self, n: int, r: int):
        rng = np.random.default_rng(self.seed)
        # uniform in the polydisk |z^alpha| < radius
        rad = self.radius * np.sqrt(rng.random((self.count, n)))
        z = rad * np.exp(2j * np.pi * rng.random((self.count, n)))
        v = rng.normal(size=(self.count, r)) + 1j * rng.normal(size=(self.count, r))
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        return z, v


@dataclass
class SignScan:
    verdict: str
    margin: float
    min_eig: float
    max_eig: float
    max_abs: float


def kobayashi_sign_scan(model: MetricModel, plan: SamplePlan) -> SignScan:
    """Classify the sign of the Hermitian matrix psi[alpha, beta] over samples."""
    z, v = plan.draw(model.n, model.r)
    psi = evaluate(model, z, v).psi_coeffs
    psi = 0.5 * (psi + np.conj(np.swapaxes(psi, -1, -2)))
    eig = np.linalg.eigvalsh(psi)
    lo, hi = float(eig.min()), float(eig.max())
    max_abs = float(np.abs(psi).max())
    if max_abs < FLAT_TOL:
        return SignScan("flat", max_abs, lo, hi, max_abs)
    if lo > 0:
        return SignScan("positive", lo, lo, hi, max_abs)
    if hi < 0:
        return SignScan("negative", hi, lo, hi, max_abs)
    return SignScan("indefinite", max(abs(lo), abs(hi)), lo, hi, max_abs)


def einstein_trace(model: MetricModel, z, v, omega) -> np.ndarray:
    """tr_omega Psi = g^{alpha betabar} K_{i jbar alpha betabar} v^i vbar^j / G.

    ``omega`` supplies ``metric(z) -> g[..., alpha, beta]``.
    """
    b = evaluate(model, z, v)
    g = np.asarray(omega.metric(b.points[..., : model.n]))
    if np.any(np.abs(np.linalg.det(g)) < 1e-300):
        raise MetricError("omega is degenerate")
    ginv = np.linalg.inv(g)
    return np.einsum("...ba,...ab->...", ginv, b.psi_coeffs)


def is_einstein(model: MetricModel, omega, plan: SamplePlan, tol: float = 1e-8) -> tuple[bool, float, float]:
    """(constant?, mean trace, spread) of tr_omega Psi over a sample plan."""
    z, v = plan.draw(model.n, model.r)
    tr = einstein_trace(model, z, v, omega)
    spread = float(np.max(np.abs(tr - tr.mean())))
    return spread < tol, float(tr.mean().real), spread


def hermitian_einstein_check(model: MetricModel, omega, plan: SamplePlan) -> tuple[float, float]:
    """Residual max |g^{alpha betabar} K^i_{j alpha betabar} - lam delta^i_j| and fitted lam."""
    if not model.hermitian:
        raise MetricError(f"{model.family} is not Hermitian-induced")
    z, v = plan.draw(model.n, model.r)
    b = evaluate(model, z, v)
    ginv = np.linalg.inv(np.asarray(omega.metric(z)))
    contracted = np.einsum("...ba,...ijab->...ij", ginv, b.K)  # lower i, jbar
    mixed = np.einsum("...jk,...ij->...ik", b.levi_inv, contracted)  # raise the barred slot
    r = model.r
    lam = float(np.mean(np.trace(mixed, axis1=-2, axis2=-1).real) / r)
    resid = float(np.max(np.abs(mixed - lam * np.eye(r))))
    return resid, lam


def pseudoconvexity_scan(model: MetricModel, plan: SamplePlan) -> tuple[float, np.ndarray]:
    """Smallest Levi eigenvalue (relative to trace) over a sample plan, with witness."""
    z, v = plan.draw(model.n, model.r)
    b = evaluate(model, z, v, order=2, check=False)
    eig, vecs = np.linalg.eigh(b.levi)
    rel = eig[..., 0] / np.trace(b.levi, axis1=-2, axis2=-1).real
    k = int(np.argmin(rel))
    return float(rel[k]), vecs[k][:, 0]


def descent_residual(model: MetricModel, z, v, lam, what: str = "xi") -> float:
    """Scale invariance of a form under v -> lam v.

    Forms pulled back from P(E) satisfy ``c(z, lam v) lam^p lambar^q =
    c(z, v)`` where (p, q) counts the vertical holomorphic / antiholomorphic
    generators of the monomial.
    """
    b = evaluate(model, z, v)
    lam = np.asarray(lam, dtype=complex)
    bl = evaluate(model, z, np.asarray(v) * lam[..., None])
    fa, fb = getattr(b, what), getattr(bl, what)
    n = model.n
    worst = 0.0
    for mask in set(fa.terms) | set(fb.terms):
        p = sum(1 for a in range(n, model.frame.m) if mask >> (2 * a) & 1)
        q = sum(1 for a in range(n, model.frame.m) if mask >> (2 * a + 1) & 1)
        lhs = fb.coefficient(mask) * lam**p * np.conj(lam) ** q
        worst = max(worst, float(np.max(np.abs(lhs - fa.coefficient(mask)))))
    return worst
