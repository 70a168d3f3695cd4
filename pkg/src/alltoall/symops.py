"""Symmetric-operator algebra for uniform all-to-all spin-1/2 models.

Permutation-invariant operators are expanded over symmetrized Pauli strings
|l, m, n) carrying l, m, n factors of sigma^x, sigma^y, sigma^z spread over
N sites.  The basis is orthonormal under the infinite-temperature inner
product (A|B) = Tr[A^dag B] / 2^N and diagonalizes the operator-size
superoperator (eigenvalue l + m + n).

Two modes are supported:

* finite mode: l + m + n <= N, anticommutator matrix elements carry the
  exact occupation factors sqrt(h (l+1) / N) with h = N - l - m - n;
* truncated large-N mode: l + m + n <= max_degree, anticommutator matrix
  elements are the N -> infinity limits sqrt(l+1), sqrt(l), which is also
  the three-term recurrence of Hermite polynomials orthonormal under
  exp(-2 x^2) dx / sqrt(pi/2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
import scipy.sparse as sp

AXES = ("x", "y", "z")

# Hard cap on the basis dimension (~6 GB of complex coefficients).
DIM_CAP = 400_000_000

# to_pauli_strings is a test oracle; dense matrices blow up past this.
DENSE_SITE_CAP = 12


class CapacityError(ValueError):
    """Requested basis or dense representation is too large."""


class TruncationError(ValueError):
    """Requested degree exceeds the large-N truncation."""


def basis_dimension(max_degree):
    d = int(max_degree)
    return (d + 1) * (d + 2) * (d + 3) // 6


@dataclass(frozen=True)
class BasisMap:
    """Bijection between (l, m, n) triples and dense linear indices.

    Ordering: total degree d = l + m + n ascending, lexicographic (l, m, n)
    within each degree block, so degree-local superoperators are banded.
    """

    max_degree: int
    n_sites: int | None  # None = truncated large-N mode

    @property
    def finite(self):
        return self.n_sites is not None

    @property
    def dim(self):
        return basis_dimension(self.max_degree)

    def index(self, ell, m, n):
        d = ell + m + n
        if d > self.max_degree or min(ell, m, n) < 0:
            raise IndexError(f"({ell},{m},{n}) outside basis (D={self.max_degree})")
        offset = d * (d + 1) * (d + 2) // 6
        return offset + ell * (d + 1) - ell * (ell - 1) // 2 + m

    @property
    def triples(self):
        return _triples_table(self.max_degree)

    @property
    def degrees(self):
        return self.triples.sum(axis=1)


@lru_cache(maxsize=32)
def _triples_table(max_degree):
    out = np.zeros((basis_dimension(max_degree), 3), dtype=np.int64)
    i = 0
    for d in range(max_degree + 1):
        for ell in range(d + 1):
            for m in range(d - ell + 1):
                out[i] = (ell, m, d - ell - m)
                i += 1
    out.setflags(write=False)
    return out


def build_basis(n_sites=None, max_degree=None):
    """Finite mode if n_sites is given, else truncated large-N mode."""
    if (n_sites is None) == (max_degree is None):
        raise ValueError("give exactly one of n_sites, max_degree")
    if n_sites is not None:
        if n_sites < 0:
            raise ValueError("n_sites must be >= 0")
        max_degree = n_sites
    elif max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    if basis_dimension(max_degree) > DIM_CAP:
        raise CapacityError(f"basis dimension {basis_dimension(max_degree)} exceeds cap")
    return BasisMap(max_degree=int(max_degree), n_sites=n_sites)


# ---------------------------------------------------------------------------
# Models


@dataclass(frozen=True)
class ModelSpec:
    """All-to-all Hamiltonian descriptor.

    kind 'euler': H = sqrt(N)/2 * sum_a J_a Sa^2   (sqrt_n normalization)
    kind 'lmg':   H = sqrt(N) * (Sx + J/2 Sz^2)
    where Sa are the sqrt(N)-normalized collective spins.  With
    normalization 'over_n' the same polynomial is taken in the 1/N-normalized
    collective spins with an overall factor N/2 (the convention under which
    entanglement growth has a large-N limit).
    """

    kind: str
    couplings: tuple
    normalization: str = "sqrt_n"

    def __post_init__(self):
        if self.kind not in ("euler", "lmg"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.normalization not in ("sqrt_n", "over_n"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if not all(np.isfinite(self.couplings)):
            raise ValueError("couplings must be finite")


def euler_top(jx, jy, jz, normalization="sqrt_n"):
    return ModelSpec("euler", (float(jx), float(jy), float(jz)), normalization)


def lmg(j, normalization="sqrt_n"):
    return ModelSpec("lmg", (float(j),), normalization)


# ---------------------------------------------------------------------------
# Operator vectors


@dataclass
class SymOpVec:
    """Coefficient vector of a symmetric operator over the |l,m,n) basis."""

    basis: BasisMap
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.basis.dim,):
            raise ValueError("coefficient vector has wrong length")

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def normalized(self):
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return SymOpVec(self.basis, self.coeffs / n)

    def dot(self, other):
        """Infinite-temperature inner product (self | other)."""
        return complex(np.vdot(self.coeffs, other.coeffs))

    def copy(self):
        return SymOpVec(self.basis, self.coeffs.copy())


def zero_vector(basis):
    return SymOpVec(basis, np.zeros(basis.dim, dtype=complex))


def basis_vector(basis, ell, m, n):
    v = zero_vector(basis)
    v.coeffs[basis.index(ell, m, n)] = 1.0
    return v


def collective_spin_vector(axis, basis):
    """The collective spin N^{-1/2} sum_j S_j^a, equal to (1/2)|e_a) exactly."""
    triple = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}[axis]
    v = basis_vector(basis, *triple)
    v.coeffs *= 0.5
    return v


# ---------------------------------------------------------------------------
# Superoperator matrices (cached sparse forms; applied matrix-free in spirit,
# one cached CSR per (operator, basis) pair)

# For axis a, the commutator hops a quantum between the two other flavors and
# the anticommutator ladders the count of flavor a against the identity slots.
_ACTIVE = {"x": (1, 2), "y": (2, 0), "z": (0, 1)}  # (decremented, incremented)
_OWN = {"x": 0, "y": 1, "z": 2}


@lru_cache(maxsize=64)
def commutator_matrix(axis, max_degree):
    """Sparse matrix of L_a = sqrt(N) [S_a, .]; elements are N-independent."""
    if axis not in AXES:
        raise ValueError(f"bad axis {axis!r}")
    basis = BasisMap(max_degree, None)
    triples = _triples_table(max_degree)
    i_dec, i_inc = _ACTIVE[axis]
    rows, cols, vals = [], [], []
    for col, t in enumerate(triples):
        t = t.copy()
        p, q = t[i_dec], t[i_inc]
        if p > 0:  # |.., p, q) -> |.., p-1, q+1) with +i sqrt(p (q+1))
            t2 = t.copy()
            t2[i_dec] -= 1
            t2[i_inc] += 1
            rows.append(basis.index(*t2))
            cols.append(col)
            vals.append(1j * np.sqrt(p * (q + 1)))
        if q > 0:  # |.., p, q) -> |.., p+1, q-1) with -i sqrt(q (p+1))
            t2 = t.copy()
            t2[i_dec] += 1
            t2[i_inc] -= 1
            rows.append(basis.index(*t2))
            cols.append(col)
            vals.append(-1j * np.sqrt(q * (p + 1)))
    m = sp.csr_matrix(
        (vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=complex
    )
    return m


@lru_cache(maxsize=64)
def anticommutator_matrix(axis, max_degree, n_sites=None):
    """Sparse matrix of M_a = {S_a, .} (S_a the sqrt(N)-normalized spin).

    Finite mode carries sqrt(h (k+1) / N) and sqrt((h+1) k / N) with
    h = N - l - m - n; the large-N mode carries sqrt(k+1) and sqrt(k).
    Weight that would leave the truncated space is dropped (see
    truncation_leak_rate for the diagnostic).
    """
    if axis not in AXES:
        raise ValueError(f"bad axis {axis!r}")
    basis = BasisMap(max_degree, n_sites)
    triples = _triples_table(max_degree)
    degrees = triples.sum(axis=1)
    own = _OWN[axis]
    rows, cols, vals = [], [], []
    for col, t in enumerate(triples):
        k = t[own]
        d = degrees[col]
        if d < max_degree:
            up = t.copy()
            up[own] += 1
            if n_sites is None:
                c = np.sqrt(k + 1.0)
            else:
                h = n_sites - d
                c = np.sqrt(h * (k + 1.0) / n_sites)
            if c != 0.0:
                rows.append(basis.index(*up))
                cols.append(col)
                vals.append(c)
        if k > 0:
            dn = t.copy()
            dn[own] -= 1
            if n_sites is None:
                c = np.sqrt(float(k))
            else:
                h = n_sites - d
                c = np.sqrt((h + 1.0) * k / n_sites)
            rows.append(basis.index(*dn))
            cols.append(col)
            vals.append(c)
    return sp.csr_matrix(
        (vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=complex
    )


@lru_cache(maxsize=32)
def _liouvillian_matrix_cached(kind, couplings, max_degree, n_sites):
    if kind == "euler":
        out = None
        for axis, j in zip(AXES, couplings):
            if j == 0.0:
                continue
            term = (
                anticommutator_matrix(axis, max_degree, n_sites)
                @ commutator_matrix(axis, max_degree)
            ) * (0.5 * j)
            out = term if out is None else out + term
        if out is None:
            out = sp.csr_matrix((basis_dimension(max_degree),) * 2, dtype=complex)
    else:  # lmg
        (j,) = couplings
        out = commutator_matrix(axis="x", max_degree=max_degree) + (0.5 * j) * (
            anticommutator_matrix("z", max_degree, n_sites)
            @ commutator_matrix("z", max_degree)
        )
    return out.tocsr()


def liouvillian_matrix(model, basis):
    """Sparse matrix of [H, .] in the sqrt(N) normalization."""
    if model.normalization != "sqrt_n":
        raise ValueError(
            "operator-space dynamics is defined in the sqrt_n normalization"
        )
    return _liouvillian_matrix_cached(
        model.kind, model.couplings, basis.max_degree, basis.n_sites
    )


def apply_commutator(axis, v):
    return SymOpVec(v.basis, commutator_matrix(axis, v.basis.max_degree) @ v.coeffs)


def apply_anticommutator(axis, v):
    m = anticommutator_matrix(axis, v.basis.max_degree, v.basis.n_sites)
    return SymOpVec(v.basis, m @ v.coeffs)


def apply_liouvillian(model, v):
    return SymOpVec(v.basis, liouvillian_matrix(model, v.basis) @ v.coeffs)


def size_expectation(v):
    """(v | Q | v) with Q the diagonal operator-size superoperator."""
    return float(np.sum(v.basis.degrees * np.abs(v.coeffs) ** 2))


def truncation_leak_rate(model, v):
    """Norm^2 per unit time pushed past the truncation by one Liouvillian kick.

    Embeds v in a basis enlarged by one degree, applies [H, .] there, and
    measures the weight landing in the extra degree block.
    """
    big = build_basis(
        n_sites=v.basis.n_sites,
        max_degree=None if v.basis.finite else v.basis.max_degree + 1,
    )
    w = np.zeros(big.dim, dtype=complex)
    w[: v.basis.dim] = v.coeffs
    out = liouvillian_matrix(model, big) @ w
    return float(np.sum(np.abs(out[v.basis.dim :]) ** 2))


# ---------------------------------------------------------------------------
# Hermite bridge

def hermite_values(k_max, x):
    """chi_0..chi_k_max at points x, orthonormal under exp(-2x^2)/sqrt(pi/2).

    Generated by the three-term recurrence 2x chi_k = sqrt(k+1) chi_{k+1}
    + sqrt(k) chi_{k-1}.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((k_max + 1,) + x.shape)
    out[0] = 1.0
    if k_max >= 1:
        out[1] = 2.0 * x
    for k in range(1, k_max):
        out[k + 1] = (2.0 * x * out[k] - np.sqrt(k) * out[k - 1]) / np.sqrt(k + 1.0)
    return out


def hermite_vector(basis, ell, m, n):
    """|chi_ell(Sx) chi_m(Sy) chi_n(Sz)) in the large-N basis: a unit vector."""
    if basis.finite:
        raise ValueError("hermite_vector is defined in the large-N mode")
    if ell + m + n > basis.max_degree:
        raise TruncationError("degree beyond truncation")
    return basis_vector(basis, ell, m, n)


def monomial_vector(basis, p, q, r):
    """Expansion of the symmetrized product Sx^p Sy^q Sz^r over the basis.

    Built by laddering with {S_a, .}/2, x factors first, then y, then z;
    mixed flavors therefore enter anticommutator-ordered.  In the large-N
    mode this reproduces the Hermite recurrence exactly.
    """
    if p + q + r > basis.max_degree:
        raise TruncationError("degree beyond truncation")
    v = basis_vector(basis, 0, 0, 0)
    for axis, count in zip(AXES, (p, q, r)):
        half_m = anticommutator_matrix(axis, basis.max_degree, basis.n_sites) * 0.5
        for _ in range(count):
            v = SymOpVec(basis, half_m @ v.coeffs)
    return v


# ---------------------------------------------------------------------------
# Dense Pauli-string oracle (tests only)

_FLAVOR_NONE = 0


@lru_cache(maxsize=512)
def _dense_basis_op(ell, m, n, n_sites):
    """Dense 2^N x 2^N matrix of |l,m,n): symmetrized sum with the
    multinomial normalization.  Bit j of a basis index = 1 means site j down.
    """
    N = n_sites
    dim = 1 << N
    sites = range(N)
    mat = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    bits = ((cols[None, :] >> np.arange(N)[:, None]) & 1).astype(np.int8)
    count = 0
    for xs in combinations(sites, ell):
        rest1 = [s for s in sites if s not in xs]
        for ys in combinations(rest1, m):
            rest2 = [s for s in rest1 if s not in ys]
            for zs in combinations(rest2, n):
                count += 1
                flip = 0
                for s in xs:
                    flip |= 1 << s
                for s in ys:
                    flip |= 1 << s
                rows = cols ^ flip
                phase = np.ones(dim, dtype=complex)
                for s in ys:
                    phase *= 1j * (1 - 2 * bits[s])
                for s in zs:
                    phase *= 1 - 2 * bits[s]
                mat[rows, cols] += phase
    return mat / np.sqrt(count)


def to_pauli_strings(v):
    """Dense 2^N x 2^N operator equal to v (finite mode, small N; test oracle)."""
    basis = v.basis
    if not basis.finite:
        raise ValueError("dense oracle requires the finite mode")
    if basis.n_sites > DENSE_SITE_CAP:
        raise CapacityError(f"dense oracle capped at N <= {DENSE_SITE_CAP}")
    dim = 1 << basis.n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for i, c in enumerate(v.coeffs):
        if c != 0.0:
            ell, m, n = basis.triples[i]
            out += c * _dense_basis_op(int(ell), int(m), int(n), basis.n_sites)
    return out


def infinite_temperature_inner(a, b):
    """(A|B) = Tr[A^dag B] / 2^N for dense matrices (test oracle)."""
    return complex(np.trace(a.conj().T @ b)) / a.shape[0]
