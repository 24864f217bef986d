import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslerforms.exterior import (
    Form,
    FormError,
    FormMatrix,
    delta_basis,
    det_plus_identity,
    mask_of,
    permutation_det,
)
from finslerforms.jets import CoordinateFrame

FRAME = CoordinateFrame(1, 2)  # generators dz, dzbar, dv1, dv1bar, dv2, dv2bar


def dz(anti=False):
    return Form.gen(FRAME, 0, anti)


def dv(i, anti=False):
    return Form.gen(FRAME, 1 + i, anti)


def random_form(seed, degree=None, density=0.5):
    rng = np.random.default_rng(seed)
    terms = {}
    for mask in range(1 << (2 * FRAME.m)):
        if degree is not None and bin(mask).count("1") != degree:
            continue
        if rng.random() < density:
            terms[mask] = rng.normal() + 1j * rng.normal()
    return Form(FRAME, terms)


def test_anticommuting_generators():
    assert (dz() ^ dz(True)).is_close(-(dz(True) ^ dz()), 0)


def test_even_forms_commute():
    a = dz() ^ dz(True)
    b = dv(0) ^ dv(0, True)
    assert (a ^ b).is_close(b ^ a, 0)


def test_square_of_generator_vanishes():
    assert (dv(0) ^ dv(0)).max_abs() == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 4), st.integers(0, 4))
def test_graded_commutativity(s, p, q):
    a, b = random_form(s, p), random_form(s + 1, q)
    assert (a ^ b).is_close((b ^ a) * (-1) ** (p * q), 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_associativity(s):
    a, b, c = random_form(s, 1), random_form(s + 1, 2), random_form(s + 2, 1)
    assert ((a ^ b) ^ c).is_close(a ^ (b ^ c), 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_bidegree_of_products(s):
    a, b = random_form(s, 2, 0.4), random_form(s + 1, 2, 0.4)
    prod = a ^ b
    for p in range(5):
        q = 4 - p
        want = Form.zero(FRAME)
        for p1 in range(3):
            want = want + (a.bidegree_extract(p1, 2 - p1) ^ b.bidegree_extract(p - p1, q - (2 - p1)))
        assert prod.bidegree_extract(p, q).is_close(want, 1e-12)


def test_extract_higher_bidegree_from_one_one():
    a = dz() ^ dz(True)
    assert a.bidegree_extract(2, 2).max_abs() == 0
    assert a.bidegree_extract(1, 1, "horizontal").is_close(a, 0)
    assert a.bidegree_extract(1, 1, "vertical").max_abs() == 0


def test_top_degree_truncation():
    # more than 2r vertical generators is impossible: the product vanishes
    vert = dv(0) ^ dv(0, True) ^ dv(1) ^ dv(1, True)
    assert (vert ^ dv(0)).max_abs() == 0


def test_unknown_split():
    with pytest.raises(FormError):
        dz().bidegree_extract(1, 0, "diagonal")


def test_frame_mismatch():
    with pytest.raises(FormError):
        dz() ^ Form.gen(CoordinateFrame(1, 1), 0)


def test_evaluate_determinant_convention():
    # (dz ^ dzbar)(X, Y) with X = d/dz, Y = d/dzbar
    rows = np.zeros((2, 2 * FRAME.m), dtype=complex)
    rows[0, 0] = 1
    rows[1, 1] = 1
    assert (dz() ^ dz(True)).evaluate(rows) == pytest.approx(1.0)
    assert (dz(True) ^ dz()).evaluate(rows) == pytest.approx(-1.0)


def test_delta_basis_identity_when_gamma_vanishes():
    f = random_form(5)
    gamma = np.zeros((2, 2, 1))
    assert delta_basis(f, gamma, [1.0, 0.5], "to_delta").is_close(f, 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_delta_basis_roundtrip(s):
    rng = np.random.default_rng(s)
    gamma = rng.normal(size=(2, 2, 1)) + 1j * rng.normal(size=(2, 2, 1))
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    f = random_form(s, 2)
    there = delta_basis(f, gamma, v, "from_delta")
    assert delta_basis(there, gamma, v, "to_delta").is_close(f, 1e-10)


def test_delta_v_image():
    gamma = np.zeros((2, 2, 1), dtype=complex)
    gamma[0, 1, 0] = 2.0
    v = np.array([1.0, 3.0])
    got = delta_basis(dv(0), gamma, v, "from_delta")
    assert got.is_close(dv(0) + dz() * 6.0, 1e-14)


def test_det_of_zero_is_one():
    zero = Form.zero(FRAME)
    d = det_plus_identity(FormMatrix([[zero, zero], [zero, zero]]), 1.0)
    assert d.is_close(Form.scalar(FRAME, 1.0), 0)


def test_det_rank_one():
    a = dz() ^ dz(True)
    assert det_plus_identity(FormMatrix([[a]]), 2.0).is_close(Form.scalar(FRAME, 1.0) + a * 2.0, 0)


def test_det_diagonal():
    A = dz() ^ dz(True)
    B = dv(0) ^ dv(0, True)
    zero = Form.zero(FRAME)
    s = 0.5j
    got = det_plus_identity(FormMatrix([[A, zero], [zero, B]]), s)
    want = Form.scalar(FRAME, 1.0) + (A + B) * s + (A ^ B) * s * s
    assert got.is_close(want, 1e-15)


@pytest.mark.parametrize("size", [1, 2, 3])
def test_det_matches_permutation_expansion(size):
    rng = np.random.default_rng(size)
    entries = [[random_form(int(rng.integers(1 << 30)), 2, 0.3) for _ in range(size)] for _ in range(size)]
    mat = FormMatrix(entries)
    scaled = [[(Form.scalar(FRAME, 1.0) if i == j else Form.zero(FRAME)) + entries[i][j] * 0.3 for j in range(size)] for i in range(size)]
    assert det_plus_identity(mat, 0.3).is_close(permutation_det(scaled, FRAME), 1e-12)


def test_odd_entries_rejected():
    with pytest.raises(FormError):
        FormMatrix([[dz()]])


def test_mask_of():
    assert mask_of(FRAME, [0], [0]) == 0b11
    assert mask_of(FRAME, [1], []) == 0b100
