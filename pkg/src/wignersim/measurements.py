"""Single-site POVMs and their Wigner tables.

For a POVM {M_k} on one site, the table T[k, r] = W_{M_k}(r) satisfies
d * sum_k T[k, r] = 1 at every phase point, so d * T[:, r] is the outcome
distribution conditioned on the phase point r.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import fourier_unitary
from .errors import NegativeTable, NotPositiveSemidefinite, NotResolutionOfIdentity, ShapeMismatch
from .phase_space import dimension, weyl_operator, wigner_values

POVM_TOL = 1e-9
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class PovmWignerTable:
    d: int
    table: np.ndarray  # shape (K, d*d)

    @property
    def outcomes(self) -> int:
        return self.table.shape[0]

    @property
    def min_entry(self) -> float:
        return float(self.table.min())

    @property
    def negative_mass(self) -> float:
        return float(np.maximum(-self.table, 0.0).sum() * self.d / (self.d * self.d))

    def normalization_error(self) -> float:
        return float(np.abs(self.d * self.table.sum(axis=0) - 1.0).max())


def validate_povm(elements: Sequence[np.ndarray], d: int, projective: bool = False) -> list[np.ndarray]:
    elements = [np.asarray(M, dtype=complex) for M in elements]
    if not elements:
        raise NotResolutionOfIdentity("a POVM needs at least one element")
    for M in elements:
        if M.shape != (d, d):
            raise ShapeMismatch(f"POVM elements act on a single site ({d}x{d}); got {M.shape}")
        if np.abs(M - M.conj().T).max() > POVM_TOL:
            raise NotPositiveSemidefinite("POVM element is not Hermitian")
        if np.linalg.eigvalsh(M).min() < -POVM_TOL:
            raise NotPositiveSemidefinite("POVM element has a negative eigenvalue")
        if projective and np.abs(M @ M - M).max() > POVM_TOL:
            raise NotPositiveSemidefinite("POVM element is not a projector")
    if np.abs(sum(elements) - np.eye(d)).max() > POVM_TOL:
        raise NotResolutionOfIdentity("POVM elements do not sum to the identity")
    return elements


def povm_wigner_table(elements: Sequence[np.ndarray], d: int, projective: bool = False) -> PovmWignerTable:
    elements = validate_povm(elements, d, projective=projective)
    table = np.array([wigner_values(M, d)[0] for M in elements])
    return PovmWignerTable(d, table)


def outcome_distribution_at(T: PovmWignerTable, r_site: Sequence[int], tol: float = 1e-10) -> np.ndarray:
    """p(k) = d * T[k, r] at the phase point r = (q, p)."""
    if T.min_entry < -tol:
        raise NegativeTable(f"POVM table has negative entry {T.min_entry:.3e}")
    q, p = r_site
    probs = T.d * np.clip(T.table[:, (q % T.d) * T.d + p % T.d], 0.0, None)
    return probs / probs.sum()


# ---------------------------------------------------------------------------
# Presets


def computational_povm(d: int) -> list[np.ndarray]:
    return [np.diag(np.eye(d)[x]).astype(complex) for x in range(d)]


def fourier_povm(d: int) -> list[np.ndarray]:
    F = fourier_unitary(d)
    return [np.outer(F[:, x], F[:, x].conj()) for x in range(d)]


def trivial_povm(d: int) -> list[np.ndarray]:
    return [np.eye(d, dtype=complex)]


def uniform_povm(d: int, outcomes: int) -> list[np.ndarray]:
    if outcomes < 1:
        raise ValueError("need at least one outcome")
    return [np.eye(d, dtype=complex) / outcomes for _ in range(outcomes)]


def stabilizer_projector(d: int, basis: int, index: int) -> np.ndarray:
    """Projector onto eigenvector ``index`` of Weyl basis ``basis``.

    Basis 0 is the eigenbasis of w(0, 1) (computational); basis b >= 1 is the
    eigenbasis of w(1, b - 1). The projector onto eigenvalue omega**index is
    d**-1 * sum_j omega**(-j index) w(j a) for the direction a.
    """
    if not 0 <= basis <= d:
        raise ValueError(f"stabilizer basis must be in 0..{d}")
    dim = dimension(d)
    a = (0, 1) if basis == 0 else (1, basis - 1)
    P = sum(dim.omega(-j * index) * weyl_operator(d, j * a[0] % d, j * a[1] % d) for j in range(d))
    return P / d


def stabilizer_povm(d: int, basis: int) -> list[np.ndarray]:
    return [stabilizer_projector(d, basis, x) for x in range(d)]
