import math

import numpy as np
import pytest

from finslerforms import oracle as O


@pytest.mark.parametrize("deriv", [1, 2, 3, 4])
def test_central_weights_exact_on_polynomials(deriv):
    offsets, w = O.central_weights(deriv, 4)
    for p in range(deriv + 4):
        got = np.dot(w, offsets**p)
        want = math.factorial(deriv) if p == deriv else 0.0
        assert got == pytest.approx(want, abs=1e-9)


def test_mixed_second_derivative_of_modulus_squared():
    val, _ = O.fd_wirtinger(lambda p: np.abs(p[:, 0]) ** 2, [0.7 + 0.2j], [0], [0])
    assert val == pytest.approx(1.0, abs=1e-8)


def test_fourth_derivative_of_fs_potential_at_origin():
    # log(1 + x) = x - x^2/2 + ..., so the |z|^4 coefficient is -1/2 and
    # d^4/dz^2 dzbar^2 of |z|^4 is 2! 2! = 4; the derivative is -2.
    val, _ = O.fd_wirtinger(lambda p: np.log(1 + np.abs(p[:, 0]) ** 2), [0.0], [0, 0], [0, 0])
    assert val == pytest.approx(-2.0, abs=1e-6)


def test_polynomial_self_test():
    # f = z^2 zbar wbar: d^2/dz^2 d/dzbar d/dwbar f = 2
    f = lambda p: p[:, 0] ** 2 * np.conj(p[:, 0]) * np.conj(p[:, 1])
    val, _ = O.fd_wirtinger(f, [0.3 - 0.1j, 1.2 + 0.5j], [0, 0], [0, 1])
    assert val == pytest.approx(2.0, abs=1e-8)
    val, _ = O.fd_wirtinger(f, [0.3 - 0.1j, 1.2 + 0.5j], [1], [])
    assert val == pytest.approx(0.0, abs=1e-8)


def test_holomorphic_derivative_of_coordinate():
    val, _ = O.fd_wirtinger(lambda p: p[:, 0] ** 3, [0.5 + 0.5j], [0], [])
    assert val == pytest.approx(3 * (0.5 + 0.5j) ** 2, abs=1e-9)


def test_order_overflow():
    with pytest.raises(O.OracleError):
        O.fd_wirtinger(lambda p: p[:, 0], [0.0], [0, 0, 0], [0, 0])


def test_step_scales_with_order():
    plan = O.FDPlan()
    assert plan.step_for(4) > plan.step_for(2) >= plan.step


def test_line_bundle_numbers():
    assert O.line_bundle_cw([1]).c1_number == 1
    assert O.line_bundle_cw([1, 2]).c1_number == 3
    assert O.line_bundle_cw([[1, 0], [0, 1]]).c2_number == 1
    assert O.line_bundle_cw([[1, 1], [1, 1]]).c2_number == 2


def test_line_bundle_lambda():
    assert O.line_bundle_cw([1, 1]).lam == pytest.approx(1.0)
    assert O.line_bundle_cw([[1, 0], [0, 1]]).lam == pytest.approx(1.0)
    assert O.line_bundle_cw([[1, 1], [1, 1]]).lam == pytest.approx(2.0)


def test_line_bundle_density_at_origin():
    h = O.line_bundle_cw([1, 1]).c1_density([[0.0]])
    assert h[0, 0, 0] == pytest.approx(1 / math.pi)


def test_brute_volume_of_cp1():
    dens = lambda z: 2 * (1 + np.abs(z[:, 0]) ** 2) ** -2
    val, band = O.brute_integrate(dens, "product", 1, 100_000, seed=1)
    assert abs(val - 2 * math.pi) <= max(band, 0.01 * 2 * math.pi)


def test_brute_fiber_normalization_flat():
    # Xi on the fiber of the flat rank-2 bundle is (i/2pi)(1+|w|^2)^-2 dw ^ dwbar
    dens = lambda w: (1 + np.abs(w[:, 0]) ** 2) ** -2 / math.pi
    val, band = O.brute_integrate(dens, "projective", 1, 100_000, seed=2)
    assert abs(val - 1) <= 0.01


def test_brute_zero():
    val, band = O.brute_integrate(lambda w: np.zeros(len(w)), "projective", 2, 1000, seed=0)
    assert val == 0 and band == 0


def test_brute_rejects_non_finite():
    with pytest.raises(O.OracleError):
        O.brute_integrate(lambda w: np.full(len(w), np.inf), "projective", 1, 100, seed=0)
