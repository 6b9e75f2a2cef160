"""Hermitian operators as weighted Pauli strings, with sparse compilation.

Qubit 0 is the leftmost letter of a Pauli string and the most significant
bit of a computational-basis index, so dense reconstructions follow the
kron chain letters[0] (x) letters[1] (x) ... (x) letters[n-1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

PAULI_LETTERS = "IXYZ"
MERGE_TOL = 1e-12
DEFAULT_MAX_QUBITS = 14

_PAULI_DENSE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class OperatorError(ValueError):
    """Malformed operator input or a violated operator precondition."""


def _letters_to_masks(letters: str) -> tuple[int, int]:
    """Map a letter string to (x_mask, z_mask); bit k of a mask is qubit k
    counted from the most significant bit."""
    n = len(letters)
    x = z = 0
    for k, c in enumerate(letters):
        bit = 1 << (n - 1 - k)
        if c == "X":
            x |= bit
        elif c == "Y":
            x |= bit
            z |= bit
        elif c == "Z":
            z |= bit
        elif c != "I":
            raise OperatorError(f"invalid Pauli letter {c!r}")
    return x, z


def _masks_to_letters(x: int, z: int, n: int) -> str:
    out = []
    for k in range(n):
        bit = 1 << (n - 1 - k)
        out.append("IXZY"[bool(x & bit) + 2 * bool(z & bit)])
    return "".join(out)


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string; the coefficient is real (Hermiticity)."""

    coefficient: float
    letters: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise OperatorError("coefficient must be finite")
        if any(c not in PAULI_LETTERS for c in self.letters):
            raise OperatorError(f"invalid letters {self.letters!r}")

    @property
    def n(self) -> int:
        return len(self.letters)


class PauliSum:
    """Canonical merged sum of Pauli strings on n qubits.

    Internally terms are stored as {(x_mask, z_mask): complex} where the
    complex value multiplies the Hermitian Pauli i^{|Y|} X^x Z^z; for a
    Hermitian sum every stored value is real.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: dict[tuple[int, int], complex] | None = None):
        if n < 1:
            raise OperatorError("need at least one qubit")
        self.n = int(n)
        merged: dict[tuple[int, int], complex] = {}
        for key, c in (terms or {}).items():
            if abs(c) < MERGE_TOL:
                continue
            merged[key] = merged.get(key, 0.0) + c
        self._terms = {k: c for k, c in merged.items() if abs(c) >= MERGE_TOL}

    @classmethod
    def from_terms(cls, terms, n: int | None = None) -> "PauliSum":
        """Build from PauliTerm objects or (coefficient, letters) pairs."""
        parsed = []
        for t in terms:
            if isinstance(t, PauliTerm):
                parsed.append((t.coefficient, t.letters))
            else:
                c, letters = t
                parsed.append((float(c), letters))
        if n is None:
            if not parsed:
                raise OperatorError("cannot infer qubit count from empty term list")
            n = len(parsed[0][1])
        acc: dict[tuple[int, int], complex] = {}
        for c, letters in parsed:
            if len(letters) != n:
                raise OperatorError("letter length mismatch")
            key = _letters_to_masks(letters)
            acc[key] = acc.get(key, 0.0) + c
        return cls(n, acc)

    @classmethod
    def zero(cls, n: int) -> "PauliSum":
        return cls(n, {})

    @classmethod
    def identity(cls, n: int, coeff: float = 1.0) -> "PauliSum":
        return cls(n, {(0, 0): coeff})

    @property
    def terms(self) -> list[PauliTerm]:
        """Terms in canonical (sorted-mask) order with real coefficients."""
        out = []
        for (x, z) in sorted(self._terms):
            c = self._terms[(x, z)]
            if abs(c.imag) > 1e-9 * max(1.0, abs(c)):
                raise OperatorError("non-Hermitian Pauli sum (complex coefficient)")
            out.append(PauliTerm(float(c.real), _masks_to_letters(x, z, self.n)))
        return out

    @property
    def num_terms(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n != other.n:
            raise OperatorError("qubit count mismatch")
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0.0) + c
        return PauliSum(self.n, acc)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (other * -1.0)

    def __mul__(self, scalar) -> "PauliSum":
        return PauliSum(self.n, {k: c * scalar for k, c in self._terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "PauliSum":
        return self * -1.0

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        """Operator product, used by the Jordan-Wigner construction."""
        if self.n != other.n:
            raise OperatorError("qubit count mismatch")
        acc: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._terms.items():
            y1 = (x1 & z1).bit_count()
            for (x2, z2), c2 in other._terms.items():
                y2 = (x2 & z2).bit_count()
                x, z = x1 ^ x2, z1 ^ z2
                y = (x & z).bit_count()
                # i^{y1} X^{x1}Z^{z1} i^{y2} X^{x2}Z^{z2}
                #   = i^{y1+y2} (-1)^{|z1&x2|} X^x Z^z
                #   = i^{y1+y2-y} (-1)^{|z1&x2|} * (i^y X^x Z^z)
                phase = (1j) ** ((y1 + y2 - y) % 4)
                if (z1 & x2).bit_count() % 2:
                    phase = -phase
                c = c1 * c2 * phase
                acc[(x, z)] = acc.get((x, z), 0.0) + c
        return PauliSum(self.n, acc)

    def hermitize(self) -> "PauliSum":
        """Drop numerically-zero imaginary parts left over from products."""
        acc = {}
        for k, c in self._terms.items():
            if abs(c.imag) > 1e-9 * max(1.0, abs(c)):
                raise OperatorError("sum is not Hermitian")
            acc[k] = c.real
        return PauliSum(self.n, acc)

    def to_dense(self) -> np.ndarray:
        """Dense matrix; accepts complex (non-Hermitian) sums such as
        intermediate Jordan-Wigner products."""
        if self.n > 12:
            raise OperatorError("dense reconstruction capped at n = 12")
        N = 2**self.n
        out = np.zeros((N, N), dtype=complex)
        for (x, z), c in sorted(self._terms.items()):
            m = np.eye(1, dtype=complex)
            for letter in _masks_to_letters(x, z, self.n):
                m = np.kron(m, _PAULI_DENSE[letter])
            out += c * m
        return out

    def __repr__(self):
        inner = " + ".join(f"{t.coefficient:g}*{t.letters}" for t in self.terms[:4])
        more = "" if self.num_terms <= 4 else f" + ... ({self.num_terms} terms)"
        return f"PauliSum(n={self.n}, {inner or '0'}{more})"


@dataclass(frozen=True)
class SparseOperator:
    """Hermitian operator compiled to CSR with fast matrix-vector products."""

    n: int
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return 2**self.n

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape[0] != self.dim:
            raise OperatorError(
                f"dimension mismatch: operator dim {self.dim}, vector {v.shape[0]}"
            )
        return self.matrix @ v

    def expectation(self, v: np.ndarray) -> float:
        """<v|A|v> for a normalized state vector (real part; Hermitian A)."""
        return float(np.real(np.vdot(v, self.matvec(v))))

    def to_dense(self) -> np.ndarray:
        return np.asarray(self.matrix.todense())

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if self.n != other.n:
            raise OperatorError("qubit count mismatch")
        return SparseOperator(self.n, (self.matrix + other.matrix).tocsr())

    def __mul__(self, scalar) -> "SparseOperator":
        return SparseOperator(self.n, (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def __neg__(self) -> "SparseOperator":
        return self * -1.0

    def shifted(self, c: float) -> "SparseOperator":
        """A + c*I."""
        eye = sp.identity(self.dim, dtype=complex, format="csr")
        return SparseOperator(self.n, (self.matrix + c * eye).tocsr())


def compile(sum_: PauliSum, max_qubits: int = DEFAULT_MAX_QUBITS) -> SparseOperator:
    """Compile a Pauli sum to a CSR matrix.

    Each string contributes one entry per column: P|b> = phase(b)|b ^ x_mask>
    with phase(b) = i^{|Y|} (-1)^{popcount(z_mask & b)}.
    """
    if sum_.n > max_qubits:
        raise OperatorError(f"n = {sum_.n} exceeds configured maximum {max_qubits}")
    N = 2**sum_.n
    cols_all, rows_all, vals_all = [], [], []
    b = np.arange(N, dtype=np.uint64)
    for (x, z), c in sorted(sum_._terms.items()):
        y = (x & z).bit_count()
        signs = 1.0 - 2.0 * (np.bitwise_count(b & np.uint64(z)) & 1).astype(np.float64)
        vals = (c * (1j) ** (y % 4)) * signs
        rows_all.append(b ^ np.uint64(x))
        cols_all.append(b)
        vals_all.append(vals)
    if not vals_all:
        mat = sp.csr_matrix((N, N), dtype=complex)
    else:
        mat = sp.coo_matrix(
            (
                np.concatenate(vals_all).astype(complex),
                (
                    np.concatenate(rows_all).astype(np.int64),
                    np.concatenate(cols_all).astype(np.int64),
                ),
            ),
            shape=(N, N),
        ).tocsr()
        mat.sum_duplicates()
    return SparseOperator(sum_.n, mat)


def matvec(op: SparseOperator, v: np.ndarray) -> np.ndarray:
    return op.matvec(v)


def spectral_norm_estimate(op: SparseOperator, iters: int = 200, tol: float = 1e-12,
                           seed: int = 7) -> float:
    """Power-iteration estimate of the spectral norm of a Hermitian operator."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = op.matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam_new = nw
        v = w / nw
        if abs(lam_new - lam) < tol * max(1.0, lam_new):
            lam = lam_new
            break
        lam = lam_new
    return float(lam)


# ---------------------------------------------------------------------------
# Jordan-Wigner mapping of spinless fermions
# ---------------------------------------------------------------------------

def _lowering(n: int, site: int) -> PauliSum:
    """c_site = Z_0...Z_{site-1} (X + iY)_site / 2 in complex mask form."""
    string_z = 0
    for k in range(site):
        string_z |= 1 << (n - 1 - k)
    bit = 1 << (n - 1 - site)
    # (X + iY)/2 : X has (x=bit, z=0) coeff 1/2; Y has (x=bit, z=bit) coeff i/2,
    # stored against the Hermitian Pauli i X Z so the stored value is i/2 real? no:
    # stored entry multiplies i^{|Y|} X^x Z^z = Y itself, so i/2 stays complex.
    return PauliSum(n, {
        (bit, string_z): 0.5,
        (bit, string_z | bit): 0.5j,
    })


def jordan_wigner(monomials, n: int) -> PauliSum:
    """Map a sum of fermionic monomials to a Pauli sum.

    ``monomials`` is an iterable of (coefficient, ops) with ops a tuple of
    (site, dagger) factors applied left to right; the empty tuple is the
    identity. Uses the convention n_i = (I - Z_i)/2 with Z strings on the
    sites preceding i.
    """
    total = PauliSum.zero(n)
    for coeff, ops in monomials:
        prod = PauliSum.identity(n, 1.0)
        for site, dagger in ops:
            if not 0 <= site < n:
                raise OperatorError(f"site {site} out of range for n = {n}")
            c = _lowering(n, site)
            factor = _dagger(c) if dagger else c
            prod = prod @ factor
        total = total + prod * coeff
    return total


def _dagger(p: PauliSum) -> PauliSum:
    # Hermitian basis elements; conjugate the coefficients.
    return PauliSum(p.n, {k: np.conj(c) for k, c in p._terms.items()})


# ---------------------------------------------------------------------------
# Model Hamiltonians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeSpec:
    """Open-boundary square grid for the spinless Hubbard model."""

    nx: int
    ny: int
    boundary: str = "open"

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise OperatorError("grid dimensions must be >= 1")
        if self.boundary != "open":
            raise OperatorError("only open boundaries supported")

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    def edges(self) -> list[tuple[int, int]]:
        """Horizontal then vertical nearest-neighbour bonds, row-major sites."""
        out = []
        for iy in range(self.ny):
            for ix in range(self.nx - 1):
                s = iy * self.nx + ix
                out.append((s, s + 1))
        for iy in range(self.ny - 1):
            for ix in range(self.nx):
                s = iy * self.nx + ix
                out.append((s, s + self.nx))
        return out


def build_hubbard_spinless(spec: LatticeSpec, mu: float, w: float, u: float):
    """Jordan-Wigner image of the spinless Hubbard Hamiltonian.

    Returns (hamiltonian, constraint_terms, target_params) where every
    constraint term has unit spectral norm and
    H = sum_j target_params[j] * constraint_terms[j].

    Per-term normalization: n_i - 1/2 has norm 1/2, the hopping combination
    has norm 1, and the density-density bond has norm 1/4, so the site,
    hopping and density coefficients are mu/2, w and u/4.
    """
    for p in (mu, w, u):
        if not np.isfinite(p):
            raise OperatorError("couplings must be finite")
    n = spec.n_sites
    edges = spec.edges()
    if not edges and (w != 0.0 or u != 0.0):
        raise OperatorError("grid has no bonds; hopping/interaction terms undefined")

    ops: list[PauliSum] = []
    params: list[float] = []

    def site_density_struct(i):
        # n_i - 1/2 -> -Z_i/2
        return jordan_wigner([(1.0, ((i, True), (i, False))), (-0.5, ())], n).hermitize()

    for i in range(n):
        struct = site_density_struct(i)           # norm 1/2
        ops.append(struct * 2.0)
        params.append(mu / 2.0)
    for (i, j) in edges:
        hop = jordan_wigner(
            [(1.0, ((i, True), (j, False))), (-1.0, ((i, False), (j, True)))], n
        ).hermitize()                             # (X Z..Z X + Y Z..Z Y)/2, norm 1
        ops.append(hop)
        params.append(w)
    for (i, j) in edges:
        dens = (site_density_struct(i) @ site_density_struct(j)).hermitize()  # ZZ/4
        ops.append(dens * 4.0)
        params.append(u / 4.0)

    ham = PauliSum.zero(n)
    for theta, op in zip(params, ops):
        ham = ham + op * theta
    return ham, ops, params


def build_xxz(n: int, J: float, Delta: float, h) -> tuple[PauliSum, list[PauliSum], list[float]]:
    """XXZ chain with per-site fields; 3n-2 unit-norm constraint terms.

    H = sum_bond [J (XX + YY) + Delta ZZ] + sum_i h_i Z_i, so the target
    coefficients of the normalized terms (XX+YY)/2, ZZ and Z_i are
    2J, Delta and h_i respectively.
    """
    if n < 2:
        raise OperatorError("XXZ chain needs n >= 2")
    h = list(np.atleast_1d(np.asarray(h, dtype=float)))
    if len(h) != n:
        raise OperatorError(f"field list has length {len(h)}, expected {n}")

    def two_site(i, a, b):
        letters = ["I"] * n
        letters[i], letters[i + 1] = a, b
        return "".join(letters)

    ops: list[PauliSum] = []
    params: list[float] = []
    for i in range(n - 1):
        ops.append(PauliSum.from_terms(
            [(0.5, two_site(i, "X", "X")), (0.5, two_site(i, "Y", "Y"))], n))
        params.append(2.0 * J)
    for i in range(n - 1):
        ops.append(PauliSum.from_terms([(1.0, two_site(i, "Z", "Z"))], n))
        params.append(Delta)
    for i in range(n):
        letters = ["I"] * n
        letters[i] = "Z"
        ops.append(PauliSum.from_terms([(1.0, "".join(letters))], n))
        params.append(h[i])

    ham = PauliSum.zero(n)
    for theta, op in zip(params, ops):
        ham = ham + op * theta
    return ham, ops, params


# ---------------------------------------------------------------------------
# Line-oriented text import/export
# ---------------------------------------------------------------------------

def dump_pauli_sum(sum_: PauliSum) -> str:
    """One term per line: '<coefficient> <letters>'."""
    lines = [f"{t.coefficient!r} {t.letters}" for t in sum_.terms]
    if not lines:
        lines = [f"{0.0!r} {'I' * sum_.n}"]
    return "\n".join(lines) + "\n"


def load_pauli_sum(text: str, n: int | None = None) -> PauliSum:
    terms = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise OperatorError(f"malformed operator line: {raw!r}")
        terms.append((float(parts[0]), parts[1]))
    if not terms and n is None:
        raise OperatorError("empty operator text")
    return PauliSum.from_terms(terms, n=n)
