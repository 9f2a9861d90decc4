"""Channels: Choi matrices, partial transposes and phase-space kernels.

Choi matrices live on in (x) out with the pairwise subsystem ordering
(in_1, out_1, ..., in_m, out_m); for m sites the row index is

    sum_k (x_in_k * d + x_out_k) * d**(2 * (m - 1 - k)).

A kernel K[r_out, r_in] is column stochastic for trace-preserving maps and
propagates Wigner tables as W_out = K @ W_in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateSite,
    NotCompletelyPositive,
    NotStochastic,
    NotSymplectic,
    NotTracePreserving,
    NotUnitary,
    ShapeMismatch,
    SupportOutOfRange,
)
from .phase_space import (
    dimension,
    index_point,
    lambda_permutation,
    site_count,
    wigner_values,
)

CHANNEL_TOL = 1e-9
STOCHASTIC_TOL = 1e-9

CLIFFORD_PRESETS = ("identity", "displacement", "fourier", "multiplier", "phase", "sum")
NOISE_PRESETS = ("depolarizing", "weyl_mixture", "dephasing")
GENERIC_KINDS = ("unitary", "kraus", "choi", "clifford")
CHANNEL_KINDS = CLIFFORD_PRESETS + NOISE_PRESETS + GENERIC_KINDS

# preset kinds whose support size is fixed
FIXED_SUPPORT = {"fourier": 1, "phase": 1, "multiplier": 1, "sum": 2}


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """A channel on ``m`` sites.

    ``kind`` is one of :data:`CHANNEL_KINDS`. Parameters by kind:

    - unitary: ``matrix``; kraus: ``operators``; choi: ``matrix`` (pairwise order)
    - clifford: ``symplectic`` (2m x 2m ints), ``displacement`` (2m ints)
    - displacement: ``vector``; multiplier: ``a``; depolarizing: ``lambda``
    - weyl_mixture: ``terms``, a sequence of (vector, weight) pairs
    """

    kind: str
    m: int
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("a channel acts on at least one site")
        fixed = FIXED_SUPPORT.get(self.kind)
        if fixed is not None and self.m != fixed:
            raise ValueError(f"{self.kind} acts on exactly {fixed} site(s), got {self.m}")


@dataclass(frozen=True)
class StochasticKernel:
    d: int
    m: int
    matrix: np.ndarray

    def __post_init__(self):
        D = self.d ** (2 * self.m)
        if self.matrix.shape != (D, D):
            raise ShapeMismatch(f"kernel for d={self.d}, m={self.m} must be {D}x{D}, got {self.matrix.shape}")

    @property
    def min_entry(self) -> float:
        return float(self.matrix.min())

    @property
    def negative_mass(self) -> float:
        return float(np.maximum(-self.matrix, 0.0).sum() / self.matrix.shape[1])


@dataclass(frozen=True)
class KernelReport:
    max_column_deviation: float
    min_entry: float
    negative_mass: float
    classification: str  # "positive" | "negative" | "not-trace-preserving"


# ---------------------------------------------------------------------------
# Gate matrices


def fourier_unitary(d: int) -> np.ndarray:
    x = np.arange(d)
    return dimension(d).omega(np.outer(x, x)) / np.sqrt(d)


def multiplier_unitary(d: int, a: int) -> np.ndarray:
    if a % d == 0:
        raise ValueError("multiplier must be nonzero mod d")
    x = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    out[(a * x) % d, x] = 1.0
    return out


def phase_unitary(d: int) -> np.ndarray:
    dim = dimension(d)
    x = np.arange(d)
    return np.diag(dim.omega(dim.inv_two * x * x))


def sum_unitary(d: int) -> np.ndarray:
    x, y = np.divmod(np.arange(d * d), d)
    out = np.zeros((d * d, d * d), dtype=complex)
    out[x * d + (x + y) % d, x * d + y] = 1.0
    return out


def weyl_multi(d: int, r: Sequence[int]) -> np.ndarray:
    tgt, ph = _weyl_monomial(d, r)
    out = np.zeros((tgt.size, tgt.size), dtype=complex)
    out[tgt, np.arange(tgt.size)] = ph
    return out


def _weyl_monomial(d: int, r: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """w(r) as (target, phase): w(r)|x> = phase[x] |target[x]>."""
    dim = dimension(d)
    m = len(r) // 2
    digits = np.indices((d,) * m).reshape(m, -1) if m else np.zeros((0, 1), dtype=int)
    shifted = digits.copy()
    exponent = np.zeros(digits.shape[1], dtype=np.int64)
    for site in range(m):
        q, p = int(r[2 * site]), int(r[2 * site + 1])
        shifted[site] = (digits[site] + q) % d
        exponent += -dim.inv_two * p * q + p * (digits[site] + q)
    target = np.ravel_multi_index(tuple(shifted), (d,) * m) if m else np.zeros(1, dtype=int)
    return target, dim.omega(exponent)


def symplectic_form(m: int) -> np.ndarray:
    J = np.zeros((2 * m, 2 * m), dtype=np.int64)
    for k in range(m):
        J[2 * k, 2 * k + 1] = 1
        J[2 * k + 1, 2 * k] = -1
    return J


def is_symplectic(S: np.ndarray, d: int) -> bool:
    S = np.asarray(S, dtype=np.int64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
        return False
    J = symplectic_form(S.shape[0] // 2)
    return bool(np.all((S.T @ J @ S - J) % d == 0))


def clifford_unitary(S: np.ndarray, v: Sequence[int], d: int) -> np.ndarray:
    """A unitary U with U A(r) U^dag = A(S r + v) for every phase point r.

    U_0 is proportional to sum_r w(S r) X w(r)^dag for any X with nonzero
    projection, which intertwines r -> w(r) and r -> w(S r); the displacement
    w(v) is then applied on the left.
    """
    S = np.asarray(S, dtype=np.int64) % d
    if not is_symplectic(S, d):
        raise NotSymplectic("matrix is not symplectic mod d")
    m = S.shape[0] // 2
    D = d**m
    points = [index_point(i, d, m) for i in range(d ** (2 * m))]
    cols = np.arange(D)
    for a in points:
        minus_a = [(-x) % d for x in a]
        U0 = np.zeros((D, D), dtype=complex)
        for r in points:
            r = np.array(r)
            chain = [_weyl_monomial(d, (-r) % d), _weyl_monomial(d, minus_a), _weyl_monomial(d, (S @ r) % d)]
            tgt, ph = cols, np.ones(D, dtype=complex)
            for t_k, ph_k in chain:
                ph = ph * ph_k[tgt]
                tgt = t_k[tgt]
            U0[tgt, cols] += ph
        norm2 = np.vdot(U0, U0).real / D
        if norm2 > 0.5:
            U0 /= np.sqrt(norm2)
            return weyl_multi(d, [int(x) % d for x in v]) @ U0
    raise AssertionError("no intertwiner found")  # unreachable for symplectic S


# ---------------------------------------------------------------------------
# Spec realisation


def channel_unitary(spec: ChannelSpec, d: int) -> np.ndarray | None:
    """The unitary implementing ``spec``, or None for non-unitary kinds."""
    k, p = spec.kind, spec.params
    if k == "identity":
        return np.eye(d**spec.m, dtype=complex)
    if k == "displacement":
        return weyl_multi(d, _vector(p["vector"], spec.m, d))
    if k == "fourier":
        return fourier_unitary(d)
    if k == "multiplier":
        return multiplier_unitary(d, int(p["a"]))
    if k == "phase":
        return phase_unitary(d)
    if k == "sum":
        return sum_unitary(d)
    if k == "unitary":
        return np.asarray(p["matrix"], dtype=complex)
    if k == "clifford":
        return clifford_unitary(p["symplectic"], _vector(p["displacement"], spec.m, d), d)
    return None


def clifford_data(spec: ChannelSpec, d: int) -> tuple[np.ndarray, np.ndarray] | None:
    """(S, v) with U A(r) U^dag = A(S r + v) for Clifford kinds, else None."""
    k, p, m = spec.kind, spec.params, spec.m
    eye = np.eye(2 * m, dtype=np.int64)
    zero = np.zeros(2 * m, dtype=np.int64)
    if k == "identity":
        return eye, zero
    if k == "displacement":
        return eye, np.array(_vector(p["vector"], m, d))
    if k == "fourier":
        return np.array([[0, -1], [1, 0]]) % d, zero
    if k == "multiplier":
        a = int(p["a"]) % d
        if a == 0:
            raise ValueError("multiplier must be nonzero mod d")
        return np.array([[a, 0], [0, pow(a, -1, d)]]), zero
    if k == "phase":
        return np.array([[1, 0], [1, 1]]), zero
    if k == "sum":
        # (q1, p1, q2, p2) -> (q1, p1 - p2, q1 + q2, p2)
        S = np.array([[1, 0, 0, 0], [0, 1, 0, -1], [1, 0, 1, 0], [0, 0, 0, 1]])
        return S % d, zero
    if k == "clifford":
        S = np.asarray(p["symplectic"], dtype=np.int64) % d
        if S.shape != (2 * m, 2 * m):
            raise ShapeMismatch(f"symplectic matrix must be {2 * m}x{2 * m}")
        if not is_symplectic(S, d):
            raise NotSymplectic("matrix is not symplectic mod d")
        return S, np.array(_vector(p["displacement"], m, d))
    return None


def channel_kraus(spec: ChannelSpec, d: int) -> list[np.ndarray]:
    """Kraus operators for ``spec`` (validated)."""
    D = d**spec.m
    U = channel_unitary(spec, d)
    if U is not None:
        _check_square(U, D, "unitary")
        if np.abs(U.conj().T @ U - np.eye(D)).max() > CHANNEL_TOL:
            raise NotUnitary("matrix is not unitary within tolerance")
        return [U]
    k, p = spec.kind, spec.params
    if k == "kraus":
        ops = [np.asarray(K, dtype=complex) for K in p["operators"]]
        if not ops:
            raise NotTracePreserving("empty Kraus list")
        for K in ops:
            _check_square(K, D, "Kraus operator")
        total = sum(K.conj().T @ K for K in ops)
        if np.abs(total - np.eye(D)).max() > CHANNEL_TOL:
            raise NotTracePreserving("Kraus operators do not satisfy sum K^dag K = 1")
        return ops
    if k == "depolarizing":
        lam = float(p["lambda"])
        if not 0.0 <= lam <= 1.0:
            raise ValueError("depolarizing strength must lie in [0, 1]")
        ops = [np.sqrt(1.0 - lam) * np.eye(D, dtype=complex)]
        if lam > 0:
            ops += [np.sqrt(lam) / D * weyl_multi(d, index_point(i, d, spec.m)) for i in range(D * D)]
        return ops
    if k == "weyl_mixture":
        terms = [(_vector(v, spec.m, d), float(w)) for v, w in p["terms"]]
        weights = np.array([w for _, w in terms])
        if not terms or weights.min() < 0 or abs(weights.sum() - 1.0) > CHANNEL_TOL:
            raise NotTracePreserving("mixture weights must be nonnegative and sum to 1")
        return [np.sqrt(w) * weyl_multi(d, v) for v, w in terms if w > 0]
    if k == "dephasing":
        ops = []
        for x in range(D):
            P = np.zeros((D, D), dtype=complex)
            P[x, x] = 1.0
            ops.append(P)
        return ops
    if k == "choi":
        f = choi_from_channel(spec, d)
        block = _pairwise_to_block(f, d, spec.m)
        evals, evecs = np.linalg.eigh(block)
        ops = []
        for lam, vec in zip(evals, evecs.T):
            if lam > CHANNEL_TOL:
                # block vector index (i_in, a_out) holds K[a, i]
                ops.append(np.sqrt(lam) * vec.reshape(D, D).T)
        return ops
    raise ValueError(f"no Kraus form for kind {k!r}")


def choi_from_kraus(ops: Sequence[np.ndarray], d: int) -> np.ndarray:
    """Choi matrix sum_k (1 (x) K_k)|omega><omega|(1 (x) K_k)^dag, pairwise ordered."""
    D = ops[0].shape[0]
    m = site_count(D, d)
    V = np.stack([np.asarray(K).T.reshape(-1) for K in ops], axis=1)
    return _block_to_pairwise(V @ V.conj().T, d, m)


def choi_from_channel(spec: ChannelSpec, d: int) -> np.ndarray:
    """Choi matrix f = (1 (x) F)|omega><omega| on in (x) out, pairwise ordered.

    Raises NotTracePreserving or NotCompletelyPositive for invalid inputs.
    """
    if spec.kind == "choi":
        f = np.asarray(spec.params["matrix"], dtype=complex)
        _check_square(f, d ** (2 * spec.m), "Choi matrix")
        if np.abs(f - f.conj().T).max() > CHANNEL_TOL:
            raise NotCompletelyPositive("Choi matrix is not Hermitian")
        if np.linalg.eigvalsh(f).min() < -CHANNEL_TOL:
            raise NotCompletelyPositive("Choi matrix has a negative eigenvalue")
        if np.abs(partial_trace_out(f, d) - np.eye(d**spec.m)).max() > CHANNEL_TOL:
            raise NotTracePreserving("tr_out(f) differs from the identity")
        return f
    return choi_from_kraus(channel_kraus(spec, d), d)


def _pairwise_axes(m: int) -> list[int]:
    # block axes (in_1..in_m, out_1..out_m) -> (in_1, out_1, ...)
    return [a for k in range(m) for a in (k, m + k)]


def _block_to_pairwise(f: np.ndarray, d: int, m: int) -> np.ndarray:
    ax = _pairwise_axes(m)
    T = f.reshape((d,) * (4 * m)).transpose(ax + [2 * m + a for a in ax])
    return T.reshape(d ** (2 * m), d ** (2 * m))


def _pairwise_to_block(f: np.ndarray, d: int, m: int) -> np.ndarray:
    inv = list(np.argsort(_pairwise_axes(m)))
    T = f.reshape((d,) * (4 * m)).transpose(inv + [2 * m + a for a in inv])
    return T.reshape(d ** (2 * m), d ** (2 * m))


def _choi_sites(f: np.ndarray, d: int) -> int:
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {f.shape}")
    n2 = site_count(f.shape[0], d)
    if n2 % 2:
        raise ShapeMismatch(f"dimension {f.shape[0]} is not d**(2m) for d={d}")
    return n2 // 2


def partial_transpose_out(f: np.ndarray, d: int) -> np.ndarray:
    """Transpose the out factors of a pairwise-ordered Choi matrix."""
    f = np.asarray(f)
    m = _choi_sites(f, d)
    M = 2 * m
    T = f.reshape((d,) * (2 * M))
    ax = list(range(2 * M))
    for k in range(1, M, 2):
        ax[k], ax[M + k] = M + k, k
    return T.transpose(ax).reshape(f.shape)


def partial_trace_out(f: np.ndarray, d: int) -> np.ndarray:
    m = _choi_sites(f, d)
    block = _pairwise_to_block(f, d, m).reshape(d**m, d**m, d**m, d**m)
    return np.einsum("iaja->ij", block)


def apply_choi(f: np.ndarray, rho: np.ndarray, d: int) -> np.ndarray:
    """F(rho) = tr_in((rho^T (x) 1) f) for a pairwise-ordered Choi matrix."""
    m = _choi_sites(f, d)
    block = _pairwise_to_block(f, d, m).reshape(d**m, d**m, d**m, d**m)
    return np.einsum("ij,iajb->ab", rho, block)


# ---------------------------------------------------------------------------
# Kernels


def kernel_from_choi(f_gamma: np.ndarray, d: int, check: bool = True) -> StochasticKernel:
    """Stochastic kernel K[r_out, r_in] from the out-transposed Choi matrix.

    K[r_out, r_in] = d**m * W_{f^Gamma}(Lambda r_in, Lambda r_out), with the
    Wigner arguments in the Choi ordering. The reflection Lambda on both
    arguments makes K represent the channel itself rather than its
    transpose-conjugated twin rho -> F(rho^T)^T.
    """
    f_gamma = np.asarray(f_gamma, dtype=complex)
    m = _choi_sites(f_gamma, d)
    W, _ = wigner_values(f_gamma, d, hermitian=True)
    W = W[lambda_permutation(d, 2 * m)]
    T = W.reshape((d * d,) * (2 * m))
    T = T.transpose(list(range(1, 2 * m, 2)) + list(range(0, 2 * m, 2)))
    D = d ** (2 * m)
    K = np.ascontiguousarray(d**m * T.reshape(D, D))
    if check:
        dev = np.abs(K.sum(axis=0) - 1.0).max()
        if dev > STOCHASTIC_TOL:
            raise NotStochastic(f"kernel column sums deviate from 1 by {dev:.3e}; map is not trace preserving")
    return StochasticKernel(d, m, K)


def clifford_kernel(S: np.ndarray, v: Sequence[int], d: int) -> StochasticKernel:
    """Permutation kernel K[S r + v, r] = 1."""
    S = np.asarray(S, dtype=np.int64) % d
    if not is_symplectic(S, d):
        raise NotSymplectic("matrix is not symplectic mod d")
    m = S.shape[0] // 2
    v = np.asarray(v, dtype=np.int64) % d
    D = d ** (2 * m)
    points = np.indices((d,) * (2 * m)).reshape(2 * m, -1)
    images = (S @ points + v[:, None]) % d
    rows = np.ravel_multi_index(tuple(images), (d,) * (2 * m))
    K = np.zeros((D, D))
    K[rows, np.arange(D)] = 1.0
    return StochasticKernel(d, m, K)


def channel_kernel(spec: ChannelSpec, d: int) -> StochasticKernel:
    data = clifford_data(spec, d)
    if data is not None:
        return clifford_kernel(*data, d)
    return kernel_from_choi(partial_transpose_out(choi_from_channel(spec, d), d), d)


def validate_kernel(K: StochasticKernel, tol: float = 1e-10) -> KernelReport:
    M = K.matrix
    dev = float(np.abs(M.sum(axis=0) - 1.0).max())
    lo = float(M.min())
    if dev > STOCHASTIC_TOL:
        cls = "not-trace-preserving"
    elif lo < -tol:
        cls = "negative"
    else:
        cls = "positive"
    return KernelReport(dev, lo, K.negative_mass, cls)


def check_support(support: Sequence[int], n: int) -> tuple[int, ...]:
    support = tuple(int(s) for s in support)
    if len(set(support)) != len(support):
        raise DuplicateSite(f"support {list(support)} repeats a site")
    for s in support:
        if not 0 <= s < n:
            raise SupportOutOfRange(f"site {s} outside 0..{n - 1}")
    return support


def apply_kernel_full(K: StochasticKernel, support: Sequence[int], W: np.ndarray, n: int) -> np.ndarray:
    """Apply a local kernel to flat n-site Wigner values, leaving other sites alone."""
    support = check_support(support, n)
    if len(support) != K.m:
        raise ShapeMismatch(f"kernel acts on {K.m} sites but support has {len(support)}")
    d2 = K.d * K.d
    T = np.asarray(W).reshape((d2,) * n)
    T = np.moveaxis(T, support, range(K.m))
    rest = T.shape[K.m:]
    T = (K.matrix @ T.reshape(d2**K.m, -1)).reshape((d2,) * K.m + rest)
    return np.moveaxis(T, range(K.m), support).reshape(-1)


def _vector(v: Sequence[int], m: int, d: int) -> tuple[int, ...]:
    v = tuple(int(x) % d for x in v)
    if len(v) != 2 * m:
        raise ShapeMismatch(f"phase-space vector must have {2 * m} entries, got {len(v)}")
    return v


def _check_square(M: np.ndarray, D: int, what: str) -> None:
    if M.shape != (D, D):
        raise ShapeMismatch(f"{what} must be {D}x{D}, got {M.shape}")


def validate_channel(spec: ChannelSpec, d: int) -> None:
    """Cheap validity checks that avoid building a Choi matrix where possible."""
    k, p = spec.kind, spec.params
    if k in ("unitary", "kraus", "choi", "weyl_mixture"):
        channel_kraus(spec, d) if k != "choi" else choi_from_channel(spec, d)
    elif k == "depolarizing":
        if not 0.0 <= float(p["lambda"]) <= 1.0:
            raise ValueError("depolarizing strength must lie in [0, 1]")
    else:
        clifford_data(spec, d)
