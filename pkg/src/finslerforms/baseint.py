"""Base manifolds, integration over M, omega-traces, degrees and slopes.

The bases are CP^1 and CP^1 x CP^1, each on its dense affine chart, with
``omega = sqrt(-1) sum_alpha (1 + |z^alpha|^2)^{-2} dz^alpha ^ dzbar^alpha``
(Fubini-Study profile, no 1/2pi).  With ``sqrt(-1) dz ^ dzbar = 2 dx dy``
this gives ``int omega = 2 pi`` on CP^1 and ``int omega^2 = 8 pi^2`` on the
product.  A top form ``c dz^1 ^ dzbar^1 ^ ... `` integrates as
``(-2i)^n int c dLebesgue``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fiberint as FI
from .exterior import Form
from .fiberint import HorizontalForm, QuadratureError, QuadratureSpec, fsum
from .finsler import TWO_PI, MetricModel
from .jets import CoordinateFrame

KINDS = {"CP1": 1, "CP1xCP1": 2}


@dataclass(frozen=True)
class BaseManifold:
    kind: str = "CP1"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown base manifold {self.kind!r}; expected one of {sorted(KINDS)}")

    @property
    def n(self) -> int:
        return KINDS[self.kind]

    @property
    def volume(self) -> float:
        """Closed form of int_M omega^n."""
        return math.factorial(self.n) * (TWO_PI**self.n)

    def profile(self, z) -> np.ndarray:
        """(1 + |z^alpha|^2)^{-2} for each factor, shape (..., n)."""
        z = np.asarray(z, dtype=complex)
        return (1.0 + np.abs(z) ** 2) ** -2

    def metric(self, z) -> np.ndarray:
        """g[..., alpha, beta] with omega = sqrt(-1) g dz^alpha ^ dzbar^beta."""
        p = self.profile(z)
        return p[..., :, None] * np.eye(self.n)

    def omega_form(self, frame: CoordinateFrame, z) -> Form:
        if frame.n != self.n:
            raise ValueError("frame and base dimensions differ")
        return Form.one_one(frame, 1j * self.metric(z), range(self.n), range(self.n))

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "omega": "sqrt(-1) sum (1+|z|^2)^-2 dz^dzbar", "volume": self.volume}


@dataclass
class SlopeReport:
    degree: float
    rank: int
    slope: float
    error: float = 0.0


def base_nodes(base: BaseManifold, spec: QuadratureSpec):
    """Chart nodes ``z`` (N, n) with Lebesgue weights (N,)."""
    n = base.n
    if spec.mode == "tensor":
        return FI.polar_nodes(n, spec.radial_order, spec.angular_order)
    zs, ws = [], []
    for a in range(n):
        w, wt = FI.sphere_chart_samples(2, spec.mc_samples, spec.seed + 104729 * a)
        zs.append(w[:, 0])
        ws.append(wt * spec.mc_samples)
    return np.stack(zs, axis=-1), np.prod(np.stack(ws, axis=-1), axis=-1) / spec.mc_samples


def base_integrate(field: Callable[[np.ndarray], object], base: BaseManifold, spec: QuadratureSpec):
    """int_M of a top-degree horizontal field; returns (value, error estimate).

    ``field(z)`` gets chart points of shape (N, n) and returns a Form whose
    top coefficient has shape (N,), or that coefficient array directly.
    Node errors carried by :class:`HorizontalForm` values are integrated along.
    """
    value, err, sigma = _integrate_once(field, base, spec)
    if spec.mode == "tensor" and spec.check_convergence:
        finer, ferr, _ = _integrate_once(field, base, spec.raised())
        diff = abs(finer - value)
        if diff > spec.tolerance:
            raise QuadratureError(f"base quadrature not converged: change {diff:.3e} > {spec.tolerance:.1e}")
        value, err = finer, max(ferr, diff)
    elif spec.mode == "montecarlo":
        err = err + 3 * sigma
    return value, err


def _integrate_once(field, base, spec):
    z, w = base_nodes(base, spec)
    out = field(z)
    node_err = 0.0
    if isinstance(out, Form):
        node_err = getattr(out, "error", 0.0)
        coeff = np.broadcast_to(out.coefficient((1 << (2 * base.n)) - 1), w.shape)
    else:
        coeff = np.broadcast_to(np.asarray(out, dtype=complex), w.shape)
    factor = (-2j) ** base.n
    vals = coeff * w * factor
    value = complex(fsum(vals[None, :], axis=1)[0])
    err = node_err * float(np.sum(np.abs(w)) * 2**base.n)
    sigma = 0.0
    if spec.mode == "montecarlo":
        sigma = float(np.std(vals * len(w)) / math.sqrt(len(w)))
    return value, err, sigma


def omega_power(base: BaseManifold, frame: CoordinateFrame, z, k: int) -> Form:
    return base.omega_form(frame, z).power(k)


def trace_omega(form: Form, base: BaseManifold, z) -> np.ndarray:
    """g^{alpha betabar} h_{alpha betabar} for a (1,1) form sqrt(-1) h dz^alpha ^ dzbar^beta."""
    h = FI.horizontal(form).coefficient_matrix()
    ginv = np.linalg.inv(base.metric(z))
    return np.einsum("...ba,...ab->...", ginv, h)


def trace_omega_sq(psi_coeffs, base: BaseManifold, z) -> np.ndarray:
    """g^{alpha deltabar} g^{gamma betabar} P_{alpha betabar} P_{gamma deltabar}."""
    ginv = np.linalg.inv(base.metric(z))
    a = np.einsum("...ab,...bc->...ac", ginv, psi_coeffs)
    return np.einsum("...ab,...ba->...", a, a)


# ---------------------------------------------------------------------------
# degrees, lambda, slopes


def _frame_for(model: MetricModel, base: BaseManifold) -> CoordinateFrame:
    if model.n != base.n:
        raise ValueError(f"model has n={model.n} but base {base.kind} has n={base.n}")
    return model.frame


def chern_field(model, base, k: int, fiber_spec, route: str = "cw") -> Callable[[np.ndarray], HorizontalForm]:
    """z -> c_k(E, G) ^ omega^{n-k} (route 'cw') or C_k ^ omega^{n-k} from Segre forms (route 'segre')."""
    frame = _frame_for(model, base)
    n = base.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got {k}")
    if route not in ("cw", "segre"):
        raise ValueError(f"unknown route {route!r}")

    def field(z):
        if route == "cw":
            ck = FI.chern_via_cw(model, z, k, fiber_spec)
        else:
            segre = [FI.segre_direct(model, z, j, fiber_spec) for j in range(1, k + 1)]
            ck = FI.horizontal(FI.chern_from_segre(segre)[k - 1], max(s.error for s in segre))
        return FI.horizontal(ck.wedge(omega_power(base, frame, z, n - k)), ck.error)

    return field


def chern_integral(model, base, k: int, base_spec, fiber_spec, route: str = "cw"):
    """int_M c_k(E, G) ^ omega^{n-k}; see :func:`chern_field` for the routes."""
    return base_integrate(chern_field(model, base, k, fiber_spec, route), base, base_spec)


def lebesgue_density(field, base: BaseManifold) -> Callable[[np.ndarray], np.ndarray]:
    """Chart density of a top-degree field, for plain Monte Carlo cross-checks."""
    top = (1 << (2 * base.n)) - 1

    def dens(z):
        return np.asarray(field(z).coefficient(top)) * (-2j) ** base.n

    return dens


def degree(model, base, base_spec, fiber_spec, route: str = "segre"):
    """deg_omega E = int_M C_1(E, G) ^ omega^{n-1}; returns (value, error)."""
    val, err = chern_integral(model, base, 1, base_spec, fiber_spec, route)
    return val.real, err


def lambda_from_class(model, base, base_spec, fiber_spec):
    """lambda = 2 pi n / int omega^n * int C_1 ^ omega^{n-1} / r."""
    deg, err = degree(model, base, base_spec, fiber_spec)
    c = TWO_PI * base.n / base.volume / model.r
    return c * deg, c * err


def slope(model, base, base_spec, fiber_spec) -> SlopeReport:
    deg, err = degree(model, base, base_spec, fiber_spec)
    return SlopeReport(deg, model.r, deg / model.r, err / model.r)


# ---------------------------------------------------------------------------
# pointwise inequalities on n = 2


def _top_ratio(form: Form, base: BaseManifold, z) -> np.ndarray:
    """(top form) / omega^n as a real-valued field."""
    vol = omega_power(base, form.frame, z, base.n).coefficient((1 << (2 * base.n)) - 1)
    return form.coefficient((1 << (2 * base.n)) - 1) / vol


def class_forms(model, z, fiber_spec):
    """(s_1, s_2, C_1, C_2) at base points for n = 2."""
    s = [FI.segre_direct(model, z, j, fiber_spec) for j in (1, 2)]
    c1, c2 = FI.chern_from_segre(s)
    return s[0], s[1], c1, c2


def kl_field(model, base, z, fiber_spec) -> np.ndarray:
    """((r-1) C_1^2 - 2r C_2) ^ omega^{n-2} divided by omega^n."""
    if base.n != 2:
        raise ValueError("the Kobayashi-Luebke field is defined here for n = 2")
    _, _, c1, c2 = class_forms(model, z, fiber_spec)
    r = model.r
    return _top_ratio(c1.wedge(c1) * (r - 1) - c2 * (2 * r), base, z).real


def segre_bound_field(model, base, z, fiber_spec, lam: float):
    """(s_2 / omega^2, bound r(r+1) lam^2 / (8 pi^2 n^2)) at base points for n = 2."""
    if base.n != 2:
        raise ValueError("the Segre bound is checked here for n = 2")
    s2 = FI.segre_direct(model, z, 2, fiber_spec)
    r, n = model.r, base.n
    return _top_ratio(s2, base, z).real, r * (r + 1) * lam**2 / (8 * math.pi**2 * n**2)


# ---------------------------------------------------------------------------
# positivity of (k,k) forms


def positivity_value(form: Form, vectors) -> np.ndarray:
    """(-sqrt(-1))^{p^2} phi(v_1..v_p, vbar_1..vbar_p) for (1,0) vectors ``vectors`` (p, n)."""
    vectors = np.asarray(vectors, dtype=complex)
    p, n = vectors.shape
    m = form.frame.m
    rows = np.zeros((2 * p, 2 * m), dtype=complex)
    for i in range(p):
        rows[i, 0 : 2 * n : 2] = vectors[i]
        rows[p + i, 1 : 2 * n : 2] = np.conj(vectors[i])
    return (-1j) ** (p * p) * form.evaluate(rows)


def positivity_margin(form: Form, p: int, count: int, seed: int) -> float:
    """Minimum real part of the positivity functional over random independent frames.

    Each frame is orthonormalised so the margin is scale free.
    """
    rng = np.random.default_rng(seed)
    n = form.frame.n
    worst = math.inf
    for _ in range(count):
        a = rng.normal(size=(n, p)) + 1j * rng.normal(size=(n, p))
        q, _ = np.linalg.qr(a)
        val = positivity_value(form, q.T[:p])
        worst = min(worst, float(np.min(np.real(val))))
    return worst
