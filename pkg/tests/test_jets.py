import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslerforms import jets as J
from finslerforms.jets import CoordinateFrame, Jet

FRAME = CoordinateFrame(1, 1)


def coords(point, order=4, frame=FRAME):
    u = J.seed(frame, np.asarray(point, dtype=complex), order)
    return u, [x.conj() for x in u]


def random_jet(seed_value, m=2, order=4, scale=0.3):
    rng = np.random.default_rng(seed_value)
    ncoef = Jet.constant(0.0, m, order).ncoef
    c = scale * (rng.normal(size=ncoef) + 1j * rng.normal(size=ncoef))
    c[0] = 0.5 + rng.random()
    return Jet(c, m, order)


def test_seed_coordinate():
    (z, v), _ = coords([0.5, 2.0])
    assert z.value == 0.5
    assert z.real_derivative([1, 0, 0, 0]) == pytest.approx(1.0)
    assert z.real_derivative([0, 1, 0, 0]) == pytest.approx(1j)
    assert np.all(z.tensor(2, 0) == 0) and np.all(z.tensor(1, 1) == 0)


def test_seed_is_holomorphic():
    (z, v), _ = coords([0.5, 2.0])
    assert v.wirtinger([1], []) == 1.0
    assert v.wirtinger([], [1]) == 0.0


def test_modulus_squared():
    (z, v), (zb, vb) = coords([0.5, 2.0])
    g = v * vb
    assert g.value == pytest.approx(4.0)
    assert g.wirtinger([1], [1]) == pytest.approx(1.0)


def test_fourth_power_of_modulus():
    (z, v), (zb, vb) = coords([0.0, 1.0])
    g = (v * vb) ** 2
    assert g.wirtinger([1, 1], [1, 1]) == pytest.approx(4.0)


def test_flat_metric_jet():
    frame = CoordinateFrame(1, 2)
    (z, v1, v2), (zb, v1b, v2b) = coords([0.0, 1.0, 1.0], frame=frame)
    g = v1 * v1b + v2 * v2b
    assert g.value == pytest.approx(2.0)
    assert g.wirtinger([1], [1]) == pytest.approx(1.0)
    assert g.wirtinger([1], [2]) == pytest.approx(0.0)


def test_fubini_study_potential():
    (z, v), (zb, vb) = coords([0.0, 1.0])
    assert J.log(1.0 + z * zb).wirtinger([0], [0]) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_log_exp_roundtrip(s):
    j = random_jet(s)
    back = j.exp().log()
    assert np.max(np.abs(back.coeffs - j.coeffs)) < 1e-12 * max(1, np.max(np.abs(j.coeffs)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 3))
def test_leibniz(s, slot):
    a, b = random_jet(s), random_jet(s + 1)
    holo, anti = ([slot], []) if slot < 2 else ([], [slot - 2])
    lhs = (a * b).wirtinger(holo, anti)
    rhs = a.wirtinger(holo, anti) * b.value + a.value * b.wirtinger(holo, anti)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_division_inverts_multiplication(s):
    a, b = random_jet(s), random_jet(s + 7)
    assert np.allclose(((a * b) / b).coeffs, a.coeffs, atol=1e-11)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 2), st.floats(-2, 2))
def test_conjugate_symmetry_of_real_jets(x, y, a, b):
    (z, v), (zb, vb) = coords([complex(x, y), complex(a, b)])
    g = (1.0 + z * zb) ** -1 * (v * vb) + (v * vb) ** 2 / (1.0 + v * vb * z * zb)
    for holo, anti in [([1], [1]), ([0, 1], [1]), ([0, 1], [0, 1]), ([1, 1], [0, 0])]:
        assert g.wirtinger(holo, anti) == pytest.approx(np.conj(g.wirtinger(anti, holo)), abs=1e-12)


def test_power_matches_repeated_product():
    j = random_jet(3)
    assert np.allclose((j**3).coeffs, (j * j * j).coeffs)
    assert np.allclose(j.pow(0.5).pow(2.0).coeffs, j.coeffs, atol=1e-12)


def test_real_part_is_real():
    j = random_jet(4)
    r = j.re()
    assert np.allclose(r.conj().coeffs, r.coeffs)


def test_batched_seed():
    pts = np.array([[0.1, 1.0], [0.2, 2.0], [0.3, 3.0]], dtype=complex)
    (z, v), (zb, vb) = coords(pts)
    assert (v * vb).value.shape == (3,)
    assert np.allclose((v * vb).wirtinger([1], [1]), 1.0)


def test_log_of_non_positive_raises():
    (z, v), (zb, vb) = coords([0.0, 1.0])
    with pytest.raises(J.JetError):
        (-(v * vb)).log()
    (z, w), _ = coords([0.0, 1j])
    with pytest.raises(J.JetError):
        w.log()  # value i is not real


def test_division_by_zero_raises():
    (z, v), _ = coords([0.0, 1.0])
    with pytest.raises(J.JetError):
        v / z


def test_frame_mismatch():
    with pytest.raises(J.JetError):
        J.seed(FRAME, [1.0, 2.0, 3.0])
    with pytest.raises(J.JetError):
        random_jet(0, m=2) + random_jet(0, m=3)


def test_order_overflow():
    (z, v), _ = coords([0.0, 1.0], order=2)
    with pytest.raises(J.JetError):
        v.wirtinger([1, 1], [1])


def test_coefficient_count():
    # multi-indices of degree <= 4 in 2(n + r) = 6 variables
    assert Jet.constant(0.0, 3, 4).ncoef == 210
