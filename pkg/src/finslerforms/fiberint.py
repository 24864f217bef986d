"""Integration along the projectivised fibers P(E_z).

Forms on P(E) are represented by their pullback along the local section
``v = (1, w)``, ``w in C^{r-1}``: ``dv^1 -> 0`` and ``dv^a -> dw^{a-1}``.
The pushforward keeps monomials whose vertical part is the full volume
``dw^1 ^ dwbar^1 ^ ... ``; in the fixed generator order horizontal bits
precede vertical ones, so no reordering sign appears.  With
``sqrt(-1) dw ^ dwbar = 2 dx dy`` that volume integrates as ``(-2i)^{r-1}``
times Lebesgue measure.

Tensor mode uses ``|w^a| = tan t`` with Gauss-Legendre nodes in
``t in [0, pi/2)`` and a uniform phase grid for every fiber coordinate.
Monte Carlo mode draws ``x`` uniformly on the unit sphere of ``C^r`` and sets
``w = x[1:] / x[0]``; the push-forward density of ``w`` is the normalised
Fubini-Study volume ``(r-1)!/pi^{r-1} (1 + |w|^2)^{-r}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import finsler as F
from .exterior import Form, _bits, det_plus_identity
from .finsler import TWO_PI, CurvatureBundle, MetricModel

log = logging.getLogger(__name__)

# bundle evaluations per vectorised chunk
CHUNK = 8192


class QuadratureError(RuntimeError):
    pass


class DescentError(QuadratureError):
    """The integrand is not pulled back from P(E)."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration plan for one fiber (or base) integral.

    ``radial_order`` Gauss-Legendre nodes in the tangent-substituted radius
    and ``angular_order`` uniform phases per complex coordinate (tensor
    mode); ``mc_samples`` seeded draws (Monte Carlo mode).  With
    ``check_convergence`` a tensor result is recomputed with both orders
    raised one notch and must move by less than ``tolerance``.
    """

    mode: str = "tensor"
    radial_order: int = 40
    angular_order: int = 8
    mc_samples: int = 100_000
    seed: int = 0
    tolerance: float = 1e-8
    check_convergence: bool = False
    check_descent: bool = True

    def __post_init__(self):
        if self.mode not in ("tensor", "montecarlo"):
            raise ValueError(f"unknown quadrature mode {self.mode!r}")
        if self.mode == "tensor" and (self.radial_order < 8 or self.angular_order < 1):
            raise ValueError("tensor mode needs radial_order >= 8 and angular_order >= 1")

    def raised(self) -> "QuadratureSpec":
        return replace(self, radial_order=self.radial_order + 8, angular_order=self.angular_order + 4)


class HorizontalForm(Form):
    """A horizontal form on the base with a quadrature error estimate."""

    __slots__ = ("error",)

    def __init__(self, frame, terms=None, error=0.0):
        super().__init__(frame, terms)
        self.error = error

    def coefficient_matrix(self) -> np.ndarray:
        """h[..., alpha, beta] with (1,1) part = sqrt(-1) sum h dz^alpha ^ dzbar^beta."""
        n = self.frame.n
        cols = []
        for a in range(n):
            row = []
            for b in range(n):
                ga, gb = 1 << (2 * a), 1 << (2 * b + 1)
                sign = 1 if ga < gb else -1
                row.append(self.coefficient(ga | gb) * sign / 1j)
            cols.append(np.stack(np.broadcast_arrays(*row), axis=-1))
        return np.stack(np.broadcast_arrays(*cols), axis=-2)

    def top_coefficient(self):
        return self.coefficient((1 << (2 * self.frame.n)) - 1)


def horizontal(form: Form, error=0.0) -> HorizontalForm:
    return HorizontalForm(form.frame, form.terms, error)


# ---------------------------------------------------------------------------
# nodes


@lru_cache(maxsize=None)
def _radial_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    t = (x + 1) * (math.pi / 4)
    wt = w * (math.pi / 4)
    rho = np.tan(t)
    # Lebesgue measure in polar form: rho d rho d phi, d rho = sec^2 t dt
    return rho, wt * rho / np.cos(t) ** 2


def polar_nodes(dim: int, radial_order: int, angular_order: int):
    """Tensor nodes ``w`` (N, dim) and Lebesgue weights (N,) on C^dim."""
    if dim == 0:
        return np.zeros((1, 0), dtype=complex), np.ones(1)
    rho, wr = _radial_nodes(radial_order)
    phi = 2 * math.pi * (np.arange(angular_order) + 0.5) / angular_order
    one = (rho[:, None] * np.exp(1j * phi[None, :])).ravel()
    one_w = np.repeat(wr, angular_order) * (2 * math.pi / angular_order)
    grids = np.meshgrid(*([np.arange(one.size)] * dim), indexing="ij")
    idx = [g.ravel() for g in grids]
    w = np.stack([one[i] for i in idx], axis=-1)
    weights = np.prod(np.stack([one_w[i] for i in idx], axis=-1), axis=-1)
    return w, weights


def fs_density(w) -> np.ndarray:
    d = w.shape[-1]
    return math.factorial(d) / math.pi**d * (1 + np.sum(np.abs(w) ** 2, axis=-1)) ** (-(d + 1))


def sphere_chart_samples(r: int, count: int, seed: int):
    """``w = x[1:]/x[0]`` for x uniform on S^{2r-1} and importance weights 1/(N p(w))."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(count, r)) + 1j * rng.normal(size=(count, r))
    w = x[:, 1:] / x[:, :1]
    return w, 1.0 / (count * fs_density(w))


def fiber_nodes(r: int, spec: QuadratureSpec):
    if spec.mode == "tensor":
        return polar_nodes(r - 1, spec.radial_order, spec.angular_order)
    if r == 1:
        return np.zeros((1, 0), dtype=complex), np.ones(1)
    return sphere_chart_samples(r, spec.mc_samples, spec.seed)


def fsum(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Exactly rounded (hence order independent) complex sum along ``axis``."""
    v = np.moveaxis(np.asarray(values, dtype=complex), axis, -1)
    flat = v.reshape(-1, v.shape[-1])
    out = np.array([complex(math.fsum(row.real), math.fsum(row.imag)) for row in flat])
    return out.reshape(v.shape[:-1])


# ---------------------------------------------------------------------------
# pushforward


def _vertical_volume(frame):
    n, m = frame.n, frame.m
    return sum(3 << (2 * a) for a in range(n + 1, m))


def _pullback_mask_ok(mask: int, frame) -> bool:
    n = frame.n
    return not (mask >> (2 * n)) & 3


def interior_euler(form: Form, v, anti: bool = False) -> Form:
    """Contraction with sum_i v^i d/dv^i (or its conjugate)."""
    frame = form.frame
    n = frame.n
    v = np.asarray(v, dtype=complex)
    out: dict[int, np.ndarray] = {}
    for mask, c in form.terms.items():
        bits = _bits(mask)
        for pos, b in enumerate(bits):
            coord, is_anti = divmod(b, 2)
            if coord < n or bool(is_anti) != anti:
                continue
            comp = v[..., coord - n]
            if anti:
                comp = np.conj(comp)
            k = mask ^ (1 << b)
            term = c * comp * (-1 if pos % 2 else 1)
            out[k] = out[k] + term if k in out else term
    return Form(frame, out)


def descent_check(integrand, frame, z, spec: QuadratureSpec, tol: float = 1e-7):
    """Scale invariance and Euler-field horizontality of a pointwise integrand."""
    rng = np.random.default_rng(spec.seed + 7919)
    n, r = frame.n, frame.r
    z = np.asarray(z, dtype=complex).reshape(-1, n)[:1]
    v = rng.normal(size=(3, r)) + 1j * rng.normal(size=(3, r))
    lam = rng.normal(size=3) + 1j * rng.normal(size=3)
    pts = np.concatenate([np.broadcast_to(z, (3, n)), v], axis=-1)
    pts_l = np.concatenate([np.broadcast_to(z, (3, n)), v * lam[:, None]], axis=-1)
    forms = _as_list(integrand(pts))
    forms_l = _as_list(integrand(pts_l))
    for fa, fb in zip(forms, forms_l):
        scale = max(1.0, fa.max_abs())
        for mask in set(fa.terms) | set(fb.terms):
            p = sum(1 for a in range(n, frame.m) if mask >> (2 * a) & 1)
            q = sum(1 for a in range(n, frame.m) if mask >> (2 * a + 1) & 1)
            lhs = fb.coefficient(mask) * lam**p * np.conj(lam) ** q
            if np.max(np.abs(lhs - fa.coefficient(mask))) > tol * scale:
                raise DescentError(f"integrand is not invariant under v -> lam v (monomial {mask:b})")
        for anti in (False, True):
            contr = interior_euler(fa, v, anti)
            if contr.max_abs() > tol * scale:
                raise DescentError("integrand has a component along the C* orbit")


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def pushforward(integrand: Callable[[np.ndarray], Form | list], frame, z, spec: QuadratureSpec):
    """Integrate a pointwise integrand over P(E_z) for a batch of base points.

    ``integrand(points)`` receives complex points of shape ``(..., n + r)``
    on the section ``v = (1, w)`` and returns a Form (or a list of Forms).
    Returns a list of :class:`HorizontalForm` with batch shape ``z.shape[:-1]``.
    """
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z[None]
    bshape = z.shape[:-1]
    zf = z.reshape(-1, frame.n)
    if spec.check_descent and frame.r > 1:
        descent_check(integrand, frame, zf, spec)
    result, err = _pushforward_once(integrand, frame, zf, spec)
    if spec.mode == "tensor" and spec.check_convergence and frame.r > 1:
        finer, _ = _pushforward_once(integrand, frame, zf, spec.raised())
        err = []
        for coarse, fine in zip(result, finer):
            diff = max([0.0] + [float(np.max(np.abs(coarse.get(k, 0) - fine.get(k, 0)))) for k in set(coarse) | set(fine)])
            if diff > spec.tolerance:
                raise QuadratureError(f"fiber quadrature not converged: change {diff:.3e} > {spec.tolerance:.1e}")
            err.append(diff)
        result = finer
    out = []
    for terms, e in zip(result, err):
        out.append(HorizontalForm(frame, {k: c.reshape(bshape) for k, c in terms.items()}, e))
    return out


def _pushforward_once(integrand, frame, zf, spec):
    n, r = frame.n, frame.r
    w, weights = fiber_nodes(r, spec)
    nodes = w.shape[0]
    vol = _vertical_volume(frame)
    factor = (-2j) ** (r - 1)
    v = np.concatenate([np.ones((nodes, 1), dtype=complex), w], axis=-1)
    B = zf.shape[0]
    # collected[form][mask] -> (B, nodes) weighted node values
    collected: list[dict[int, np.ndarray]] = []
    per = max(1, CHUNK // nodes)
    for s in range(0, B, per):
        zc = zf[s : s + per]
        pts = np.concatenate(
            [np.broadcast_to(zc[:, None, :], (zc.shape[0], nodes, n)), np.broadcast_to(v[None], (zc.shape[0], nodes, r))],
            axis=-1,
        )
        for pstart in range(0, nodes, CHUNK):
            sub = pts[:, pstart : pstart + CHUNK]
            forms = _as_list(integrand(sub))
            if not collected:
                collected = [dict() for _ in forms]
            for slot, form in zip(collected, forms):
                for mask, c in form.terms.items():
                    if not _pullback_mask_ok(mask, frame) or (mask & ~((1 << (2 * n)) - 1)) != vol:
                        continue
                    key = mask & ((1 << (2 * n)) - 1)
                    arr = slot.setdefault(key, np.zeros((B, nodes), dtype=complex))
                    arr[s : s + zc.shape[0], pstart : pstart + CHUNK] += np.broadcast_to(c, sub.shape[:-1])
    results, errors = [], []
    for slot in collected:
        terms = {}
        err = 0.0
        for key, vals in slot.items():
            weighted = vals * weights[None, :] * factor
            terms[key] = fsum(weighted, axis=1)
            if spec.mode == "montecarlo" and nodes > 1:
                sd = np.std(weighted * nodes, axis=1) / math.sqrt(nodes)
                err = max(err, float(3 * np.max(sd)))
        results.append(terms)
        errors.append(err)
    return results, errors


def fiber_integrate(model: MetricModel, z, integrand: Callable[[CurvatureBundle], Form], spec: QuadratureSpec, order: int = 4):
    """Pushforward of ``integrand(bundle)`` where the bundle is evaluated at each node."""

    def at(points):
        return integrand(F.evaluate(model, points[..., : model.n], points[..., model.n :], order=order))

    res = pushforward(at, model.frame, z, spec)
    return res if len(res) > 1 else res[0]


# ---------------------------------------------------------------------------
# Segre and Chern forms


def segre_direct(model: MetricModel, z, j: int, spec: QuadratureSpec) -> HorizontalForm:
    """s_j(E, G) = pi_* Xi^{r-1+j}."""
    if j < 0 or j > model.n:
        raise ValueError(f"Segre index must be in [0, n], got {j}")
    if j == 0:
        return horizontal(Form.scalar(model.frame, 1.0))
    res = fiber_integrate(model, z, lambda b: b.xi.power(model.r - 1 + j), spec, order=2)
    return horizontal(res.bidegree_extract(j, j), res.error)


def segre_via_psi(model: MetricModel, z, k: int, spec: QuadratureSpec) -> HorizontalForm:
    """s_k from (-1)^k s_k = (2pi)^{-k} C(r-1+k, k) pi_*(Psi^k ^ omega_FS^{r-1})."""
    if k < 1:
        raise ValueError("segre_via_psi needs k >= 1")
    r = model.r

    def integrand(b):
        return b.psi.power(k).wedge(b.omega_fs.power(r - 1))

    res = fiber_integrate(model, z, integrand, spec, order=4)
    c = (-1) ** k * math.comb(r - 1 + k, k) / TWO_PI**k
    return horizontal(res * c, res.error * abs(c))


def chern_via_cw(model: MetricModel, z, k: int, spec: QuadratureSpec) -> HorizontalForm:
    """c_k(E, G) = pi_*(c_k(pi^*E, h^G) ^ Xi^{r-1})."""
    if k < 0 or k > model.r:
        raise ValueError(f"Chern index must be in [0, r], got {k}")
    if k == 0:
        return horizontal(Form.scalar(model.frame, 1.0))

    def integrand(b):
        ck = det_plus_identity(b.theta, 1j / TWO_PI).degree_part(2 * k)
        return ck.wedge(b.xi.power(model.r - 1))

    res = fiber_integrate(model, z, integrand, spec, order=4)
    return horizontal(res.bidegree_extract(k, k), res.error)


def chern_from_segre(segre: Sequence[Form]) -> list[Form]:
    """Graded inverse: C = s^{-1}, given s_1..s_N; returns C_1..C_N."""
    if not segre:
        return []
    frame = segre[0].frame
    s = [Form.scalar(frame, 1.0)] + list(segre)
    c = [Form.scalar(frame, 1.0)]
    for k in range(1, len(s)):
        acc = Form.zero(frame)
        for j in range(1, k + 1):
            acc = acc + s[j].wedge(c[k - j])
        c.append(-acc)
    return c[1:]


def bott_chern_c0(model: MetricModel, hmodel: MetricModel, z, spec: QuadratureSpec):
    """The scalar transgression term c~_0(E, G; h) at base points ``z``.

    (i/2pi) pi_*[ log(G/h) sum_i Xi_G^i Xi_h^{r-1-i} - log(det G_{ijbar}/det h_{ijbar}) Xi_G^{r-1} ]
    """
    if not hmodel.hermitian or hmodel.n != model.n or hmodel.r != model.r:
        raise ValueError("bott_chern_c0 needs a Hermitian model on the same bundle")
    r, n = model.r, model.n

    def integrand(points):
        bg = F.evaluate(model, points[..., :n], points[..., n:], order=2)
        bh = F.evaluate(hmodel, points[..., :n], points[..., n:], order=2)
        log_ratio = np.log(bg.G / bh.G)
        log_det = np.log(np.linalg.det(bg.levi).real / np.linalg.det(bh.levi).real)
        mix = Form.zero(model.frame)
        for i in range(r):
            mix = mix + bg.xi.power(i).wedge(bh.xi.power(r - 1 - i))
        return (mix * log_ratio - bg.xi.power(r - 1) * log_det) * (1j / TWO_PI)

    res = pushforward(integrand, model.frame, z, spec)[0]
    return res.coefficient(0), res.error


def averaged_metric(model: MetricModel, z, spec: QuadratureSpec) -> np.ndarray:
    """h(G)_{ijbar}(z) = integral of G_{ijbar} against i_z^* omega_FS^{r-1}."""
    r = model.r

    def integrand(b):
        vol = b.omega_fs.power(r - 1)
        return [vol * b.levi[..., i, j] for i in range(r) for j in range(r)]

    res = fiber_integrate(model, z, integrand, spec, order=3)
    res = _as_list(res)
    vals = np.stack([np.broadcast_to(f.coefficient(0), np.shape(f.coefficient(0))) for f in res], axis=-1)
    return vals.reshape(vals.shape[:-1] + (r, r))


def l2_dual_metric(model: MetricModel, z, u, spec: QuadratureSpec):
    """h_z(u) = integral over P(E_z) of |<u, v>|^2 e^{-log G} (omega^phi)^{r-1}/(r-1)!.

    ``omega^phi = sqrt(-1) d_v dbar_v log G`` (no 2pi); ``<u, v> = sum u_i v^i``.
    """
    u = np.asarray(u, dtype=complex)
    if np.all(u == 0):
        raise ValueError("u must be nonzero")
    n, r, m = model.n, model.r, model.frame.m

    def integrand(b):
        omega_phi = Form.one_one(b.frame, 1j * b.logG_hessian[..., n:, n:], range(n, m), range(n, m))
        pair = np.abs(np.einsum("i,...i->...", u, b.v)) ** 2 / b.G
        return omega_phi.power(r - 1) * (pair / math.factorial(r - 1))

    res = fiber_integrate(model, z, integrand, spec, order=2)
    return res.coefficient(0).real, res.error
