"""Acceptance criteria, one printed PASS/FAIL line each.

Every criterion runs the shipped config under ``configs/`` through the same
code path as the CLI and reads the resulting checks.  Runtime budgets are
measured with ``time.perf_counter`` around the scenario call.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from finslerforms import finsler as F
from finslerforms import oracle as O
from finslerforms import scenarios as S

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
_CACHE: dict = {}

pytestmark = pytest.mark.slow


def report(name):
    if name not in _CACHE:
        cfg = S.ScenarioConfig.load(CONFIGS / f"{name}.yaml")
        t0 = time.perf_counter()
        rep = S.run(cfg)
        _CACHE[name] = (rep, time.perf_counter() - t0)
    return _CACHE[name]


def checks(name, *needles):
    rep, _ = report(name)
    return [c for c in rep.checks if all(n in c.name for n in needles)]


def verdict(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def num(x):
    return abs(complex(x))


def test_criterion_01_euler_suite(capsys):
    found = []
    for name in ("verify-identities", "verify-identities-product"):
        found += checks(name, "homogeneity identities") + checks(name, "gamma v = 0")
    worst = max(num(c.computed) for c in found)
    control = checks("verify-identities", "non-homogeneous control")
    slow = max(report(n)[1] for n in ("verify-identities", "verify-identities-product"))
    ok = all(c.passed for c in found) and worst < 1e-9 and control and control[0].passed and slow < 10
    verdict(capsys, 1, ok, f"worst residual {worst:.2e} over {len(found)} checks; control residual "
            f"{num(control[0].computed):.2e}; slowest run {slow:.1f} s")


def test_criterion_02_decomposition(capsys):
    found = checks("verify-identities", "Xi = -Psi/2pi + omega_FS")
    families = {c.name.split()[0] for c in found}
    worst = max(num(c.computed) for c in found)
    secs = report("verify-identities")[1]
    ok = worst < 1e-9 and {"HermitianDiagonal", "FinslerPerturbed"} <= families and secs < 10
    verdict(capsys, 2, ok, f"worst coefficient residual {worst:.2e} ({len(found)} models, {secs:.1f} s)")


def test_criterion_03_fiber_normalization(capsys):
    found = checks("fiber-normalization", "integral of Xi^(r-1)")
    rep, secs = report("fiber-normalization")
    tensor = [c for c in found if "Monte Carlo" not in c.name]
    mc = [c for c in found if "Monte Carlo" in c.name]
    worst = max(num(complex(c.computed) - 1) for c in tensor)
    ok = all(c.passed for c in found) and worst < 1e-6 and mc and secs < 60
    verdict(capsys, 3, ok, f"tensor |int - 1| <= {worst:.2e}; r=3 Monte Carlo {complex(mc[0].computed).real:.6f} "
            f"+- {mc[0].tolerance:.1e}; {secs:.1f} s")


def test_criterion_04_segre_routes(capsys):
    k1 = checks("segre", "s_1 direct vs via Psi")
    k2 = checks("segre-product", "s_2 direct vs via Psi")
    w1 = max(num(c.computed) for c in k1)
    w2 = max(num(c.computed) for c in k2)
    secs = report("segre")[1] + report("segre-product")[1]
    ok = all(c.passed for c in k1 + k2) and w1 < 1e-6 and w2 < 1e-4 and secs < 300
    verdict(capsys, 4, ok, f"k=1 worst {w1:.2e}; k=2 worst {w2:.2e}; {secs:.1f} s")


def test_criterion_05_chern_invariance(capsys):
    found = checks("chern", "equals class value") + checks("chern", "int c_1 = int C_1")
    rep, secs = report("chern")
    cases = len(checks("chern", "int c_1 = int C_1"))
    worst = max(num(complex(c.computed) - complex(c.expected)) for c in found)
    ok = all(c.passed for c in found) and cases == 6 and secs / cases < 120
    verdict(capsys, 5, ok, f"{cases} cases, worst deviation {worst:.2e}; {secs / cases:.1f} s per case")


def test_criterion_06_gauss_bonnet(capsys):
    found = checks("gauss-bonnet", "chi(CP1)")
    worst = max(num(complex(c.computed) - 2) for c in found)
    ok = all(c.passed for c in found) and worst < 1e-4
    verdict(capsys, 6, ok, f"int c_1(TCP1) - 2 = {worst:.2e} on both routes")


def test_criterion_07_transgression(capsys):
    rep, secs = report("transgression")
    resid = rep.values["relative_residual"]
    kappa = rep.values["fitted_constant"]
    ok = rep.passed and resid < 0.05 and secs < 300
    verdict(capsys, 7, ok, f"relative residual {resid:.2e}; fitted constant {complex(kappa).real:.6f}"
            f"{complex(kappa).imag:+.1e}i; {secs:.1f} s")


def test_criterion_08_positivity(capsys):
    found = []
    for name in ("positivity", "positivity-product"):
        found += checks(name, "positive-definite") + checks(name, "random frames")
    margin = min(float(np.real(c.computed)) for c in found)
    has_k2 = bool(checks("positivity-product", "(-1)^2 s_2"))
    ok = all(c.passed for c in found) and margin > 1e-6 and has_k2
    verdict(capsys, 8, ok, f"smallest margin {margin:.3e} over {len(found)} checks (k=2 on CP1xCP1 via Monte Carlo)")


def test_criterion_09_einstein(capsys):
    rep, _ = report("einstein")
    spread = rep.values["trace_spread"]
    mean = rep.values["trace_mean"]
    lam = rep.values["lambda_class"]
    add = checks("einstein", "lambda(E x L)")
    ok = rep.passed and spread < 1e-8 and abs(mean - 1) < 1e-8 and abs(lam - 1) < 1e-4 and add and add[0].passed
    verdict(capsys, 9, ok, f"tr Psi = {mean:.12f} (spread {spread:.1e}); class lambda {lam:.8f}; "
            f"additivity error {num(complex(add[0].computed) - complex(add[0].expected)):.1e}")


def test_criterion_10_kl_and_segre_bound(capsys):
    names = ("kl-equality", "kl-strict", "segre-bound-equality", "segre-bound-strict")
    ok = all(report(n)[0].passed for n in names)
    secs = sum(report(n)[1] for n in names)
    eq = checks("kl-equality", "KL equality")[0]
    st = checks("kl-strict", "KL strict")[0]
    sb = checks("segre-bound-strict", "Segre bound strict")[0]
    ok = ok and num(eq.computed) < 1e-3 and float(np.real(st.computed)) < 0 and secs < 600
    verdict(capsys, 10, ok, f"equality field {num(eq.computed):.1e}; strict KL max {float(np.real(st.computed)):.4e}; "
            f"strict Segre gap {float(np.real(sb.computed)):.4e}; {secs:.1f} s")


def test_criterion_11_slope(capsys):
    rep, _ = report("slope")
    eq = checks("slope", "slope equality")[0]
    ok = rep.passed and num(complex(eq.computed) - complex(eq.expected)) < 1e-4
    verdict(capsys, 11, ok, f"restricted {complex(eq.computed).real:.8f} vs total {complex(eq.expected).real:.8f}")


def test_criterion_12_flatness(capsys):
    rep, _ = report("flatness")
    flat = checks("flatness", "classified flat")[0]
    c1 = checks("flatness", "vanishes pointwise")[0]
    l2 = checks("flatness", "z-constant")
    gamma = checks("flatness", "non-Hermitian")[0]
    ok = rep.passed and flat.passed and num(c1.computed) < 1e-8 and all(num(c.computed) < 1e-6 for c in l2) and gamma.passed
    verdict(capsys, 12, ok, f"C_1 max {num(c1.computed):.1e}; L2 spread {max(num(c.computed) for c in l2):.1e}; "
            f"|gamma| {num(gamma.computed):.2e}")


def _fd_tensor_errors(model, z, v):
    """Relative errors of jet Levi, third and curvature tensors against finite differences."""
    b = F.evaluate(model, z, v)
    plan = O.FDPlan()
    n, r = model.n, model.r
    pt = b.points
    fd = lambda h, a: O.fd_wirtinger(model.value, pt, h, a, plan)[0]
    levi = np.array([[fd([n + i], [n + j]) for j in range(r)] for i in range(r)])
    d3 = np.array([[[fd([n + i, a], [n + l]) for a in range(n)] for l in range(r)] for i in range(r)])
    K = S._fd_curvature(model, pt, plan)
    jet3 = np.moveaxis(b.jet.tensor(2, 1)[: n, n:, n:], 0, -1)  # (i, l, a)
    rel = lambda a, ref: float(np.max(np.abs(a - ref)) / np.max(np.abs(ref)))
    return max(rel(b.levi, levi), rel(jet3, d3), rel(b.K, K))


def test_criterion_13_oracle_gate(capsys):
    fd_checks = checks("verify-identities", "finite-difference oracle") + checks("verify-identities-product", "finite-difference oracle")
    model = F.FinslerPerturbed(1, 2, [1, 2], eps=0.1, tilt=1)
    z, v = F.SamplePlan(20, seed=2024).draw(1, 2)
    worst_fd = max(_fd_tensor_errors(model, z[p], v[p]) for p in range(20))
    bands = []
    for name in ("fiber-normalization", "chern", "gauss-bonnet"):
        bands += checks(name, "brute-force 3 sigma band")
    ok = all(c.passed for c in fd_checks) and worst_fd < 1e-5 and bands and all(c.passed for c in bands)
    verdict(capsys, 13, ok, f"jet vs FD worst relative {worst_fd:.1e} at 20 points (+{len(fd_checks)} model checks); "
            f"{sum(c.passed for c in bands)}/{len(bands)} quadrature integrals inside brute-force bands")
