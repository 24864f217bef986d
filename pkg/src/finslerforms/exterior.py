"""Pointwise complex exterior algebra on dz, dzbar, dv, dvbar.

Generators are bits of an integer mask: holomorphic coordinate ``a`` owns
bit ``2a`` (``du^a``) and bit ``2a + 1`` (``dubar^a``), coordinates
enumerated ``z^1..z^n, v^1..v^r``.  A monomial is stored in increasing bit
order, so every horizontal generator precedes every vertical one.
Coefficients are complex scalars or arrays sharing one batch shape.

Measure convention: for each complex coordinate ``w``,
``sqrt(-1) dw ^ dwbar`` integrates as ``2 dx dy``.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Mapping

import numpy as np

from .jets import CoordinateFrame


class FormError(ValueError):
    pass


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _merge_sign(a: int, b: int) -> int:
    """Sign of reordering (gens of a)(gens of b) into increasing order."""
    count = 0
    bb = b
    while bb:
        low = bb & -bb
        count += _popcount(a & ~((low << 1) - 1))
        bb ^= low
    return -1 if count & 1 else 1


def _bits(mask: int) -> list[int]:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return out


class Form:
    """Element of the exterior algebra at one point (or a batch of points)."""

    __slots__ = ("frame", "terms")

    def __init__(self, frame: CoordinateFrame, terms: Mapping[int, object] | None = None):
        self.frame = frame
        self.terms: dict[int, np.ndarray] = {}
        for mask, c in (terms or {}).items():
            if mask >> (2 * frame.m):
                raise FormError(f"mask {mask:b} has generators outside the frame")
            self.terms[mask] = np.asarray(c, dtype=complex)

    # -- constructors -------------------------------------------------
    @classmethod
    def scalar(cls, frame, value) -> "Form":
        return cls(frame, {0: value})

    @classmethod
    def zero(cls, frame) -> "Form":
        return cls(frame, {})

    @classmethod
    def gen(cls, frame, coord: int, anti: bool = False, coeff=1.0) -> "Form":
        return cls(frame, {1 << (2 * coord + int(anti)): coeff})

    @classmethod
    def one_one(cls, frame, coeffs, rows: Iterable[int], cols: Iterable[int]) -> "Form":
        """sum_{a,b} coeffs[..., a, b] du^rows[a] ^ dubar^cols[b]."""
        coeffs = np.asarray(coeffs, dtype=complex)
        out: dict[int, np.ndarray] = {}
        for a, ra in enumerate(rows):
            for b, cb in enumerate(cols):
                ga, gb = 1 << (2 * ra), 1 << (2 * cb + 1)
                mask = ga | gb
                c = coeffs[..., a, b] * _merge_sign(ga, gb)
                out[mask] = out[mask] + c if mask in out else c
        return cls(frame, out)

    # -- algebra ------------------------------------------------------
    def _check(self, other: "Form"):
        if other.frame != self.frame:
            raise FormError("forms live on different frames")

    def __add__(self, other):
        if not isinstance(other, Form):
            other = Form.scalar(self.frame, other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return Form(self.frame, out)

    __radd__ = __add__

    def __neg__(self):
        return Form(self.frame, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if isinstance(scalar, Form):
            return self.wedge(scalar)
        s = np.asarray(scalar)
        return Form(self.frame, {k: c * s for k, c in self.terms.items()})

    __rmul__ = __mul__

    def wedge(self, other: "Form") -> "Form":
        self._check(other)
        out: dict[int, np.ndarray] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                if ka & kb:
                    continue
                c = ca * cb
                if _merge_sign(ka, kb) < 0:
                    c = -c
                k = ka | kb
                out[k] = out[k] + c if k in out else c
        return Form(self.frame, out)

    __xor__ = wedge

    def power(self, k: int) -> "Form":
        out = Form.scalar(self.frame, 1.0)
        for _ in range(k):
            out = out.wedge(self)
        return out

    # -- bookkeeping --------------------------------------------------
    def _mask_split(self):
        n = self.frame.n
        holo = sum(1 << (2 * a) for a in range(self.frame.m))
        hor = (1 << (2 * n)) - 1
        return holo, hor

    def bidegree_of(self, mask: int) -> tuple[int, int]:
        holo, _ = self._mask_split()
        p = _popcount(mask & holo)
        return p, _popcount(mask) - p

    def degrees(self) -> set[int]:
        return {_popcount(k) for k in self.terms}

    def bidegree_extract(self, p: int, q: int, split: str = "total") -> "Form":
        """Component with exactly p unbarred and q barred generators.

        ``split`` restricts further to purely horizontal (dz, dzbar only) or
        purely vertical (dv, dvbar only) monomials.
        """
        if split not in ("total", "horizontal", "vertical"):
            raise FormError(f"unknown split {split!r}")
        _, hor = self._mask_split()
        out = {}
        for k, c in self.terms.items():
            if self.bidegree_of(k) != (p, q):
                continue
            if split == "horizontal" and k & ~hor:
                continue
            if split == "vertical" and k & hor:
                continue
            out[k] = c
        return Form(self.frame, out)

    def degree_part(self, d: int) -> "Form":
        return Form(self.frame, {k: c for k, c in self.terms.items() if _popcount(k) == d})

    def coefficient(self, mask: int):
        return self.terms.get(mask, np.zeros((), dtype=complex))

    def substitute(self, images: Mapping[int, "Form"]) -> "Form":
        """Replace generator bits by 1-forms (a pullback-style linear substitution)."""
        out = Form.zero(self.frame)
        cache: dict[int, Form] = {}
        for k, c in self.terms.items():
            if k not in cache:
                mono = Form.scalar(self.frame, 1.0)
                for b in _bits(k):
                    mono = mono.wedge(images[b] if b in images else Form(self.frame, {1 << b: 1.0}))
                cache[k] = mono
            out = out + cache[k] * c
        return out

    def map_coeffs(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Form":
        return Form(self.frame, {k: fn(c) for k, c in self.terms.items()})

    def max_abs(self) -> float:
        if not self.terms:
            return 0.0
        return float(max(np.max(np.abs(c)) for c in self.terms.values()))

    def is_close(self, other: "Form", atol: float) -> bool:
        return (self - other).max_abs() <= atol

    def evaluate(self, vectors) -> np.ndarray:
        """Value on tangent vectors.

        ``vectors`` has shape ``(k, 2m)``: row ``b`` lists ``(du^a(X_b),
        dubar^a(X_b))`` interleaved in generator order.  Only the degree-k
        part contributes; monomials act by the determinant convention
        ``(e1 ^ e2)(X, Y) = e1(X) e2(Y) - e1(Y) e2(X)``.
        """
        vectors = np.asarray(vectors, dtype=complex)
        k = vectors.shape[0]
        total = np.zeros((), dtype=complex)
        for mask, c in self.terms.items():
            bits = _bits(mask)
            if len(bits) != k:
                continue
            mat = vectors[:, bits].T  # mat[i, j] = gen_i(X_j)
            total = total + c * np.linalg.det(mat)
        return total

    def __repr__(self):
        return f"Form(n={self.frame.n}, r={self.frame.r}, terms={len(self.terms)})"


def mask_of(frame: CoordinateFrame, holo: Iterable[int] = (), anti: Iterable[int] = ()) -> int:
    mask = 0
    for a in holo:
        mask |= 1 << (2 * a)
    for b in anti:
        mask |= 1 << (2 * b + 1)
    return mask


def delta_basis(form: Form, gamma, v, direction: str = "to_delta") -> Form:
    """Rewrite ``form`` over {dz, dzbar, delta v, delta vbar} or back.

    ``delta v^k = dv^k + Gamma^k_{j alpha} v^j dz^alpha`` with ``gamma``
    indexed ``[..., k, j, alpha]``.  Forms on the delta side reuse the dv bit
    positions for delta v.  ``from_delta`` maps a delta-basis form to the
    coordinate basis; ``to_delta`` is its inverse.
    """
    if direction not in ("to_delta", "from_delta"):
        raise FormError(f"unknown direction {direction!r}")
    frame = form.frame
    n, r = frame.n, frame.r
    gamma = np.asarray(gamma, dtype=complex)
    v = np.asarray(v, dtype=complex)
    shift = np.einsum("...kja,...j->...ka", gamma, v)  # N^k_alpha
    sgn = 1.0 if direction == "from_delta" else -1.0
    images = {}
    for k in range(r):
        hol = Form.gen(frame, n + k)
        ant = Form.gen(frame, n + k, anti=True)
        for a in range(n):
            hol = hol + Form.gen(frame, a, coeff=sgn * shift[..., k, a])
            ant = ant + Form.gen(frame, a, anti=True, coeff=sgn * np.conj(shift[..., k, a]))
        images[2 * (n + k)] = hol
        images[2 * (n + k) + 1] = ant
    return form.substitute(images)


class FormMatrix:
    """r x r matrix of even-degree forms sharing one frame."""

    def __init__(self, entries):
        self.entries = [list(row) for row in entries]
        r = len(self.entries)
        if any(len(row) != r for row in self.entries):
            raise FormError("FormMatrix must be square")
        frames = {e.frame for row in self.entries for e in row}
        if len(frames) != 1:
            raise FormError("FormMatrix entries must share one frame")
        self.frame = frames.pop()
        for row in self.entries:
            for e in row:
                if any(d % 2 for d in e.degrees()):
                    raise FormError("FormMatrix entries must have even degree")

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def trace(self) -> Form:
        out = Form.zero(self.frame)
        for i in range(self.size):
            out = out + self.entries[i][i]
        return out


def det_plus_identity(theta: FormMatrix, scale) -> Form:
    """det(I + scale * Theta) by cofactor expansion along the first row.

    Entries are even, hence commute, so the commutative determinant applies.
    Components of total degree 2k are the k-th Chern-Weil pieces.
    """
    if theta.size > 4:
        raise FormError("det_plus_identity supports r <= 4")
    frame = theta.frame
    mat = [
        [(Form.scalar(frame, 1.0) if i == j else Form.zero(frame)) + theta[i, j] * scale for j in range(theta.size)]
        for i in range(theta.size)
    ]
    return _cofactor_det(mat, frame)


def _cofactor_det(mat, frame) -> Form:
    size = len(mat)
    if size == 1:
        return mat[0][0]
    out = Form.zero(frame)
    for j in range(size):
        minor = [row[:j] + row[j + 1 :] for row in mat[1:]]
        term = mat[0][j].wedge(_cofactor_det(minor, frame))
        out = out + (term if j % 2 == 0 else -term)
    return out


def permutation_det(mat, frame) -> Form:
    """Leibniz permutation expansion (reference implementation)."""
    size = len(mat)
    out = Form.zero(frame)
    for perm in itertools.permutations(range(size)):
        inv = sum(1 for a in range(size) for b in range(a + 1, size) if perm[a] > perm[b])
        term = Form.scalar(frame, 1.0)
        for i in range(size):
            term = term.wedge(mat[i][perm[i]])
        out = out + (term if inv % 2 == 0 else -term)
    return out
