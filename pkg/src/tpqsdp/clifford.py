"""Uniformly random n-qubit stabilizer states, materialized as state vectors.

Sampling draws a uniformly random binary symplectic matrix with the
Koenig-Smolin transvection construction; the stabilizer rows (the images of
the Z basis) plus uniform sign bits then determine a uniformly random
stabilizer state, which is exactly the distribution of U|0...0> for U
uniform over the Clifford group.

Symplectic vectors are interleaved (x0, z0, x1, z1, ...) and carried as
integer bitmasks (bit 2k = x_k, bit 2k+1 = z_k) for speed; the public
tableau exposes the conventional 2n x 2n binary matrix. Pauli masks follow
the operators-module convention that qubit 0 is the most significant index
bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class TableauError(ValueError):
    """Inconsistent or malformed stabilizer tableau."""


# ---------------------------------------------------------------------------
# Symplectic linear algebra over F2 on interleaved bitmask vectors
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _even_mask(nn: int) -> int:
    """Bits 0, 2, 4, ... of an nn-bit word."""
    m = 0
    for i in range(0, nn, 2):
        m |= 1 << i
    return m


def symplectic_inner(v: int, w: int, nn: int) -> int:
    e = _even_mask(nn)
    t = (v & e & (w >> 1)) | ((w & e & (v >> 1)) << 1)
    return t.bit_count() & 1


def _transvect(h: int, v: int, nn: int) -> int:
    return v ^ h if symplectic_inner(h, v, nn) else v


def _find_transvection(x: int, y: int, nn: int) -> tuple[int, int]:
    """h1, h2 with T_h1 T_h2 x = y for nonzero x, y (Koenig-Smolin Lemma 2)."""
    if x == y:
        return 0, 0
    if symplectic_inner(x, y, nn) == 1:
        return x ^ y, 0

    z = 0
    # try a qubit where both x and y have support
    for i in range(nn // 2):
        xx, xz = (x >> 2 * i) & 1, (x >> (2 * i + 1)) & 1
        yx, yz = (y >> 2 * i) & 1, (y >> (2 * i + 1)) & 1
        if (xx or xz) and (yx or yz):
            zx, zz = xx ^ yx, xz ^ yz
            if zx == 0 and zz == 0:
                zz = 1
                if xx != xz:
                    zx = 1
            z = (zx << 2 * i) | (zz << (2 * i + 1))
            return x ^ z, y ^ z
    # disjoint supports: fix one qubit from each
    for i in range(nn // 2):
        xx, xz = (x >> 2 * i) & 1, (x >> (2 * i + 1)) & 1
        yx, yz = (y >> 2 * i) & 1, (y >> (2 * i + 1)) & 1
        if (xx or xz) and not (yx or yz):
            if xx == xz:
                z |= 1 << (2 * i + 1)
            else:
                z |= (xz << 2 * i) | (xx << (2 * i + 1))
            break
    for i in range(nn // 2):
        xx, xz = (x >> 2 * i) & 1, (x >> (2 * i + 1)) & 1
        yx, yz = (y >> 2 * i) & 1, (y >> (2 * i + 1)) & 1
        if not (xx or xz) and (yx or yz):
            if yx == yz:
                z |= 1 << (2 * i + 1)
            else:
                z |= (yz << 2 * i) | (yx << (2 * i + 1))
            break
    return x ^ z, y ^ z


def _random_symplectic_rows(n: int, rng: np.random.Generator) -> list[int]:
    """Uniform symplectic matrix as bitmask rows (images of e1, f1, e2, ...)."""
    nn = 2 * n
    f1 = int(rng.integers(1, 1 << nn))
    h1, h2 = _find_transvection(1, f1, nn)  # e1 has bitmask 1

    bits = int(rng.integers(0, 1 << (nn - 1)))
    b0 = bits & 1
    eprime = 1
    for j in range(2, nn):
        eprime |= ((bits >> (j - 1)) & 1) << j
    h0 = _transvect(h2, _transvect(h1, eprime, nn), nn)
    if b0 == 1:
        f1 = 0

    if n == 1:
        rows = [1, 2]
    else:
        inner = _random_symplectic_rows(n - 1, rng)
        rows = [1, 2] + [r << 2 for r in inner]
    out = []
    for r in rows:
        r = _transvect(h2, _transvect(h1, r, nn), nn)
        r = _transvect(h0, r, nn)
        out.append(_transvect(f1, r, nn))
    return out


def random_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform 2n x 2n symplectic matrix over F2; rows are the images of the
    symplectic basis e1, f1, e2, f2, ..."""
    rows = _random_symplectic_rows(n, rng)
    nn = 2 * n
    out = np.zeros((nn, nn), dtype=np.int8)
    for i, r in enumerate(rows):
        for j in range(nn):
            out[i, j] = (r >> j) & 1
    return out


# ---------------------------------------------------------------------------
# Stabilizer tableau and state materialization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilizerTableau:
    """2n x 2n binary symplectic matrix (interleaved columns) plus sign bits
    for the n stabilizer rows.

    Rows 2i are the destabilizer images and rows 2i+1 the stabilizer
    generators of the encoded state.
    """

    n: int
    symplectic: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        if self.symplectic.shape != (2 * self.n, 2 * self.n):
            raise TableauError("symplectic matrix shape mismatch")
        if self.signs.shape != (self.n,):
            raise TableauError("need one sign bit per stabilizer generator")

    def is_valid(self) -> bool:
        """Rows satisfy the symplectic inner-product relations."""
        nn = 2 * self.n
        S = self.symplectic.astype(np.int64)
        J = np.zeros((nn, nn), dtype=np.int64)
        for i in range(self.n):
            J[2 * i, 2 * i + 1] = J[2 * i + 1, 2 * i] = 1
        return bool(np.array_equal((S @ J @ S.T) % 2, J))

    def stabilizer_masks(self) -> list[tuple[int, int, int]]:
        """Stabilizer generators as (x_mask, z_mask, phase mod 4) with the
        generator equal to i^phase X^x Z^z; qubit 0 is the MSB."""
        out = []
        for i in range(self.n):
            row = self.symplectic[2 * i + 1]
            x = z = 0
            for k in range(self.n):
                bit = 1 << (self.n - 1 - k)
                if row[2 * k]:
                    x |= bit
                if row[2 * k + 1]:
                    z |= bit
            phase = ((x & z).bit_count() + 2 * int(self.signs[i])) % 4
            out.append((x, z, phase))
        return out

    @classmethod
    def computational(cls, n: int) -> "StabilizerTableau":
        """Tableau of |0...0>: stabilizers Z_i, destabilizers X_i."""
        S = np.zeros((2 * n, 2 * n), dtype=np.int8)
        for i in range(n):
            S[2 * i, 2 * i] = 1          # X_i destabilizer
            S[2 * i + 1, 2 * i + 1] = 1  # Z_i stabilizer
        return cls(n, S, np.zeros(n, dtype=np.int8))

    @classmethod
    def plus_all(cls, n: int) -> "StabilizerTableau":
        """Tableau of the uniform superposition: stabilizers X_i."""
        S = np.zeros((2 * n, 2 * n), dtype=np.int8)
        for i in range(n):
            S[2 * i, 2 * i + 1] = 1      # Z_i destabilizer
            S[2 * i + 1, 2 * i] = 1      # X_i stabilizer
        return cls(n, S, np.zeros(n, dtype=np.int8))


def sample_random_stabilizer(n: int, rng: np.random.Generator) -> StabilizerTableau:
    """Uniform over the stabilizer states; deterministic given the rng state."""
    if not 1 <= n <= 14:
        raise ValueError("supported range is 1 <= n <= 14")
    S = random_symplectic(n, rng)
    signs = rng.integers(0, 2, n).astype(np.int8)
    return StabilizerTableau(n, S, signs)


@lru_cache(maxsize=8)
def _basis_indices(n: int) -> np.ndarray:
    return np.arange(2**n, dtype=np.uint64)


def _pauli_apply(x: int, z: int, phase: int, v: np.ndarray, n: int) -> np.ndarray:
    """(i^phase X^x Z^z) v via index bit operations."""
    b = _basis_indices(n)
    signs = 1.0 - 2.0 * (np.bitwise_count(b & np.uint64(z)) & 1).astype(np.float64)
    out = np.empty_like(v)
    out[b ^ np.uint64(x)] = ((1j) ** (phase % 4)) * signs * v
    return out


def _pauli_mul(p1, p2):
    x1, z1, f1 = p1
    x2, z2, f2 = p2
    return (x1 ^ x2, z1 ^ z2, (f1 + f2 + 2 * (z1 & x2).bit_count()) % 4)


def tableau_to_statevector(t: StabilizerTableau) -> np.ndarray:
    """Exact unit-norm state vector stabilized by all generators.

    Gaussian elimination on the X parts splits the generators into k rows
    with independent X support and n-k pure-Z rows; the Z rows fix a basis
    state x0 inside the support, and the X rows act as projectors
    (I+g)/sqrt(2) on |x0>, which is exact because each flip leaves the
    current support.
    """
    n = t.n
    rows = t.stabilizer_masks()
    x_rows: list[tuple[int, int, int]] = []
    remaining = list(rows)
    for k in range(n):
        bit = 1 << (n - 1 - k)
        pivot = None
        kept = []
        for r in remaining:
            if pivot is None and (r[0] & bit):
                pivot = r
            else:
                kept.append(r)
        if pivot is None:
            remaining = kept
            continue
        remaining = [(_pauli_mul(pivot, r) if (r[0] & bit) else r) for r in kept]
        x_rows.append(pivot)
    z_rows = remaining

    # linear system over F2 for a support basis state: z . x0 = phase/2
    eqs = []
    for (x, z, phase) in z_rows:
        if x != 0 or phase % 2 != 0:
            raise TableauError("inconsistent tableau (non-real pure-Z element)")
        eqs.append((z, (phase // 2) % 2))
    x0 = _solve_f2(eqs)

    N = 2**n
    v = np.zeros(N, dtype=complex)
    v[x0] = 1.0
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for (x, z, phase) in x_rows:
        v = (v + _pauli_apply(x, z, phase, v, n)) * inv_sqrt2
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-9:
        raise TableauError(f"materialization lost norm ({norm})")
    return v / norm


def _solve_f2(equations: list[tuple[int, int]]) -> int:
    """Particular solution x (bitmask) of z_i . x = r_i over F2."""
    pivots = []  # (leading bit, reduced z, reduced r)
    for z, r in equations:
        for bit, zp, rp in pivots:
            if z & bit:
                z ^= zp
                r ^= rp
        if z == 0:
            if r != 0:
                raise TableauError("inconsistent tableau (unsolvable sign system)")
            continue
        pivots.append((1 << (z.bit_length() - 1), z, r))
    x = 0
    # later pivots were reduced against earlier leading bits, so flipping a
    # leading bit never disturbs the already-satisfied equations
    for bit, z, r in reversed(pivots):
        if (x & z).bit_count() % 2 != r:
            x ^= bit
    return x


def random_stabilizer_state(n: int, rng: np.random.Generator) -> np.ndarray:
    """Convenience: sample a tableau and materialize it."""
    return tableau_to_statevector(sample_random_stabilizer(n, rng))
