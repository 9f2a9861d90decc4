"""Discrete phase space for qudits of odd prime dimension.

A single site has phase space Z_d x Z_d with points (q, p). An m-site phase
vector r = (q_1, p_1, ..., q_m, p_m) is linearised as

    index(r) = sum_l (q_l * d + p_l) * d**(2 * (m - 1 - l))

which is C-order flattening of an array with axes (q_1, p_1, ..., q_m, p_m).
Every table, kernel and file format in the package uses this ordering.

The Wigner function of an operator O on m sites is

    W_O(r) = d**-m * tr(A(r_1) (x) ... (x) A(r_m) O),    A(r) = w(r) P w(r)^dag

with w the symmetric Weyl operators and P the parity operator. With this
normalisation tr(AB) = d**m * sum_r W_A(r) W_B(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DimensionNotOddPrime, ImagResidueTooLarge, ShapeMismatch

HERMITIAN_INPUT_TOL = 1e-9


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for k in range(2, math.isqrt(n) + 1):
        if n % k == 0:
            return False
    return True


@dataclass(frozen=True)
class Dimension:
    """Local dimension d with its derived constants."""

    d: int
    inv_two: int = field(init=False)
    omega_powers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.d
        if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 3 or not is_prime(int(d)):
            raise DimensionNotOddPrime(f"local dimension must be an odd prime, got {d!r}")
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "inv_two", (int(d) + 1) // 2)
        k = np.arange(d)
        powers = np.cos(2 * np.pi * k / d) + 1j * np.sin(2 * np.pi * k / d)
        powers.setflags(write=False)
        object.__setattr__(self, "omega_powers", powers)

    def omega(self, exponent) -> np.ndarray | complex:
        """omega**exponent with the exponent reduced mod d first."""
        return self.omega_powers[np.mod(exponent, self.d)]


@lru_cache(maxsize=None)
def dimension(d: int) -> Dimension:
    return Dimension(d)


def mod_inverse_two(d: int) -> int:
    return dimension(d).inv_two


def point_index(r: Sequence[int], d: int) -> int:
    """Canonical index of the flattened phase vector r = (q_1, p_1, ...)."""
    idx = 0
    for x in r:
        idx = idx * d + int(x) % d
    return idx


def index_point(index: int, d: int, m: int) -> tuple[int, ...]:
    """Inverse of :func:`point_index` for an m-site vector."""
    coords = []
    for _ in range(2 * m):
        index, x = divmod(index, d)
        coords.append(x)
    return tuple(reversed(coords))


def shift_operator(d: int, q: int) -> np.ndarray:
    x = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    out[(x + q) % d, x] = 1.0
    return out


def boost_operator(d: int, p: int) -> np.ndarray:
    return np.diag(dimension(d).omega(p * np.arange(d)))


def weyl_operator(d: int, q: int, p: int) -> np.ndarray:
    """w(q, p) = omega**(-p q / 2) z(p) x(q) as a d x d unitary."""
    dim = dimension(d)
    x = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    # z(p) x(q)|x> = omega**(p (x + q)) |x + q>
    out[(x + q) % d, x] = dim.omega(-dim.inv_two * p * q + p * (x + q))
    return out


def weyl_operator_multi(d: int, r: Sequence[int]) -> np.ndarray:
    """Tensor product w(q_1, p_1) (x) ... for a flattened phase vector."""
    out = np.ones((1, 1), dtype=complex)
    for q, p in zip(r[0::2], r[1::2]):
        out = np.kron(out, weyl_operator(d, q, p))
    return out


def parity_operator(d: int) -> np.ndarray:
    x = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    out[(-x) % d, x] = 1.0
    return out


def phase_point_operator(d: int, q: int, p: int) -> np.ndarray:
    w = weyl_operator(d, q, p)
    return w @ parity_operator(d) @ w.conj().T


@lru_cache(maxsize=None)
def phase_point_operators(d: int) -> np.ndarray:
    """All single-site A(q, p), shape (d*d, d, d), indexed by q*d + p."""
    ops = np.array([phase_point_operator(d, q, p) for q in range(d) for p in range(d)])
    ops.setflags(write=False)
    return ops


def site_count(dim: int, d: int) -> int:
    m = round(math.log(dim, d)) if dim > 1 else 0
    if d**m != dim:
        raise ShapeMismatch(f"operator dimension {dim} is not a power of d={d}")
    return m


@dataclass(frozen=True)
class WignerTensor:
    """Real Wigner table over Z_d^(2m), flat in canonical order."""

    d: int
    m: int
    values: np.ndarray
    imag_residue: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.d ** (2 * self.m),):
            raise ShapeMismatch(
                f"expected {self.d ** (2 * self.m)} values for d={self.d}, m={self.m}, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @property
    def tensor(self) -> np.ndarray:
        """View with one axis of length d*d per site."""
        return self.values.reshape((self.d * self.d,) * self.m)

    def __getitem__(self, r: Sequence[int]) -> float:
        return float(self.values[point_index(r, self.d)])

    def total(self) -> float:
        return float(self.values.sum())

    def min(self) -> float:
        return float(self.values.min())


def wigner_values(op: np.ndarray, d: int, hermitian: bool = True) -> tuple[np.ndarray, float]:
    """Raw Wigner transform returning (flat real values, max imaginary residue).

    The trace against A(r_1) (x) ... (x) A(r_m) is contracted one site at a
    time, so cost stays O(d**(2m) * d**(2m)) rather than materialising the
    d**(2m) phase point operators.
    """
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {op.shape}")
    m = site_count(op.shape[0], d)
    A = phase_point_operators(d)
    # axes: rows j_1..j_m, cols i_1..i_m;  tr(A (x) B O) = sum A_ij B_kl O_{jl,ik}
    T = op.reshape((d,) * (2 * m))
    for s in range(m):
        remaining = m - s
        T = np.tensordot(T, A, axes=([0, remaining], [2, 1]))
    vals = T.reshape(-1) / d**m
    residue = float(np.abs(vals.imag).max()) if vals.size else 0.0
    if hermitian and residue > HERMITIAN_INPUT_TOL:
        raise ImagResidueTooLarge(f"imaginary residue {residue:.3e} for an operator declared Hermitian")
    return np.ascontiguousarray(vals.real), residue


def wigner_transform(op: np.ndarray, d: int, m: int | None = None, hermitian: bool = True) -> WignerTensor:
    op = np.asarray(op)
    if m is not None and op.shape != (d**m, d**m):
        raise ShapeMismatch(f"operator shape {op.shape} does not match d={d}, m={m}")
    values, residue = wigner_values(op, d, hermitian=hermitian)
    return WignerTensor(d, site_count(op.shape[0], d), values, residue)


def inverse_wigner_values(values: np.ndarray, d: int) -> np.ndarray:
    """O = sum_r W(r) A(r_1) (x) ... (x) A(r_m)."""
    values = np.asarray(values)
    m = site_count(values.size, d * d)
    A = phase_point_operators(d)
    T = values.reshape((d * d,) * m).astype(complex)
    for _ in range(m):
        T = np.tensordot(T, A, axes=([0], [0]))
    # axes now (i_1, j_1, i_2, j_2, ...)
    T = T.transpose(list(range(0, 2 * m, 2)) + list(range(1, 2 * m, 2)))
    return T.reshape(d**m, d**m)


def inverse_wigner_transform(W: WignerTensor) -> np.ndarray:
    return inverse_wigner_values(W.values, W.d)


def overlap(WA: WignerTensor, WB: WignerTensor) -> float:
    """tr(AB) from Wigner tables: d**m * sum_r W_A(r) W_B(r)."""
    if (WA.d, WA.m) != (WB.d, WB.m):
        raise ShapeMismatch(f"cannot overlap (d={WA.d}, m={WA.m}) with (d={WB.d}, m={WB.m})")
    return float(WA.d**WA.m * np.dot(WA.values, WB.values))


def apply_lambda(r: Sequence[int], d: int) -> tuple[int, ...]:
    """(q_l, p_l) -> (q_l, -p_l mod d) on every site."""
    return tuple(int(x) % d if i % 2 == 0 else (-int(x)) % d for i, x in enumerate(r))


@lru_cache(maxsize=None)
def lambda_permutation(d: int, m: int) -> np.ndarray:
    """perm with perm[index(r)] = index(Lambda r); W_{A^T} = W_A[perm]."""
    grids = np.indices((d,) * (2 * m))
    for axis in range(1, 2 * m, 2):
        grids[axis] = (-grids[axis]) % d
    perm = np.ravel_multi_index(tuple(grids), (d,) * (2 * m)).reshape(-1)
    perm.setflags(write=False)
    return perm


def product_wigner(tables: Sequence[np.ndarray]) -> np.ndarray:
    """Flat Wigner values of a product operator from its per-site tables."""
    out = np.ones(1)
    for t in tables:
        out = np.multiply.outer(out, np.asarray(t, dtype=float)).reshape(-1)
    return out
