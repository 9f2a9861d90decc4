"""Brute-force references for checking the sampler.

Two exact evaluators of the outcome distribution:

- :func:`dense_simulate` evolves the full d**n density matrix through each
  gate's Kraus superoperator and takes Born-rule probabilities.
- :func:`wigner_chain_distribution` propagates the full d**(2n) Wigner
  table through the compiled kernels and contracts with the POVM tables.

They share nothing beyond the circuit's matrices, so agreement between them
checks the Wigner transform, kernels, POVM tables and all normalisation
constants at once. The remaining helpers compare distributions and measure
how far outcome probabilities move when every circuit element is nudged
toward its uniform counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from . import channels as ch
from .channels import StochasticKernel
from .circuit import (
    Circuit,
    WignerProgram,
    compile_to_wigner,
    dense_povm,
    dense_state,
    gate,
    gate_channel,
    kraus_gate,
    povm_elements,
    stabilizer_state,
    state_matrix,
    unitary_gate,
)
from .errors import ShapeMismatch, TooLarge
from .measurements import PovmWignerTable
from .phase_space import product_wigner

DEFAULT_MAX_DENSE = 3**7
DEFAULT_MAX_PHASE_POINTS = 3**8


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities over outcome tuples as an array of shape (K_1, ..., K_n)."""

    d: int
    probs: np.ndarray

    @property
    def n(self) -> int:
        return self.probs.ndim

    @property
    def shape(self) -> tuple:
        return self.probs.shape

    def __getitem__(self, outcome: Sequence[int]) -> float:
        return float(self.probs[tuple(outcome)])

    def as_dict(self) -> dict[tuple, float]:
        return {tuple(int(k) for k in idx): float(p) for idx, p in np.ndenumerate(self.probs)}

    @classmethod
    def from_counts(cls, d: int, counts: Mapping[tuple, int], shape: Sequence[int]) -> "OutcomeDistribution":
        arr = np.zeros(tuple(shape))
        for outcome, c in counts.items():
            arr[tuple(outcome)] += c
        total = arr.sum()
        return cls(d, arr / total if total else arr)


@dataclass(frozen=True)
class ComparisonReport:
    linf: float
    tvd: float
    kl: float | None  # KL(P || P'); None when P' vanishes where P does not

    def to_dict(self) -> dict:
        return {"linf": self.linf, "tvd": self.tvd, "kl": self.kl}


# ---------------------------------------------------------------------------
# Dense operator simulation


def _superoperator(ops: Sequence[np.ndarray]) -> np.ndarray:
    """L[a, b, i, j] = sum_k K[a, i] conj(K[b, j])."""
    ops = np.asarray(ops)
    return np.einsum("kai,kbj->abij", ops, ops.conj())


def _apply_local(rho: np.ndarray, L: np.ndarray, support: Sequence[int], n: int, d: int) -> np.ndarray:
    m = len(support)
    L = L.reshape((d,) * (4 * m))
    in_axes = list(support) + [n + s for s in support]
    out = np.tensordot(L, rho, axes=(list(range(2 * m, 4 * m)), in_axes))
    # out axes: new rows (m), new cols (m), then untouched rho axes in order
    labels = [("r", s) for s in support] + [("c", s) for s in support]
    labels += [("r", l) for l in range(n) if l not in support] + [("c", l) for l in range(n) if l not in support]
    target = [("r", l) for l in range(n)] + [("c", l) for l in range(n)]
    return out.transpose([labels.index(x) for x in target])


def _born_table(rho: np.ndarray, povms: Sequence[Sequence[np.ndarray]], n: int) -> np.ndarray:
    T = rho
    for l in range(n):
        M = np.asarray(povms[l])
        remaining = n - l
        # tr(rho M) = sum rho_ij M_ji
        T = np.tensordot(T, M, axes=([0, remaining], [2, 1]))
    return T


def dense_simulate(c: Circuit, max_dense: int = DEFAULT_MAX_DENSE) -> OutcomeDistribution:
    """Exact outcome distribution by evolving the d**n density matrix."""
    d, n = c.d, c.n
    if d**n > max_dense:
        raise TooLarge(f"dense simulation needs dimension {d}**{n} = {d**n} > cap {max_dense}")
    rho = np.ones((1, 1), dtype=complex)
    for s in c.initial:
        rho = np.kron(rho, state_matrix(s, d))
    rho = rho.reshape((d,) * (2 * n))
    for g in c.gates:
        L = _superoperator(ch.channel_kraus(gate_channel(g), d))
        rho = _apply_local(rho, L, g["support"], n, d)
    probs = _born_table(rho, [povm_elements(m, d) for m in c.measurements], n)
    return OutcomeDistribution(d, np.ascontiguousarray(probs.real))


# ---------------------------------------------------------------------------
# Phase-space chain


def propagate_wigner(prog: WignerProgram, max_points: int = DEFAULT_MAX_PHASE_POINTS) -> np.ndarray:
    """Full n-site Wigner table after the last gate."""
    size = prog.d ** (2 * prog.n)
    if size > max_points:
        raise TooLarge(f"phase-space chain needs {size} points > cap {max_points}")
    W = product_wigner(prog.site_tables)
    for K, support in prog.kernels:
        W = ch.apply_kernel_full(K, support, W, prog.n)
    return W


def _measure_wigner(W: np.ndarray, povm_tables: Sequence[PovmWignerTable], d: int, n: int) -> np.ndarray:
    T = W.reshape((d * d,) * n)
    for tab in povm_tables:
        T = np.tensordot(T, d * tab.table, axes=([0], [1]))
    return T


def wigner_chain_distribution(prog: WignerProgram, max_points: int = DEFAULT_MAX_PHASE_POINTS) -> OutcomeDistribution:
    W = propagate_wigner(prog, max_points)
    return OutcomeDistribution(prog.d, _measure_wigner(W, prog.povm_tables, prog.d, prog.n))


# ---------------------------------------------------------------------------
# Comparisons


def compare_distributions(P: OutcomeDistribution, Q: OutcomeDistribution) -> ComparisonReport:
    if P.shape != Q.shape:
        raise ShapeMismatch(f"outcome spaces differ: {P.shape} vs {Q.shape}")
    diff = np.abs(P.probs - Q.probs)
    support = P.probs > 0
    if np.any(Q.probs[support] <= 0):
        kl = None
    else:
        kl = float(np.sum(P.probs[support] * np.log(P.probs[support] / Q.probs[support])))
    return ComparisonReport(float(diff.max()), float(0.5 * diff.sum()), kl)


@dataclass(frozen=True)
class ChiSquared:
    statistic: float
    dof: int
    pvalue: float


def chi_squared_test(counts: Mapping[tuple, int], P: OutcomeDistribution, min_expected: float = 5.0) -> ChiSquared:
    """Goodness of fit of observed counts to P.

    Outcomes with P below 1e-12 are treated as impossible: any count there
    gives p = 0. Cells with expected count below ``min_expected`` are pooled.
    """
    observed = OutcomeDistribution.from_counts(P.d, counts, P.shape).probs.reshape(-1)
    shots = sum(counts.values())
    observed = observed * shots
    probs = P.probs.reshape(-1)
    impossible = probs < 1e-12
    if observed[impossible].sum() > 0:
        return ChiSquared(math.inf, 0, 0.0)
    obs, exp = observed[~impossible], shots * probs[~impossible]
    small = exp < min_expected
    if small.any():
        obs = np.append(obs[~small], obs[small].sum())
        exp = np.append(exp[~small], exp[small].sum())
    if obs.size < 2:
        return ChiSquared(0.0, 0, 1.0)
    exp = exp * obs.sum() / exp.sum()
    res = stats.chisquare(obs, exp)
    return ChiSquared(float(res.statistic), int(obs.size - 1), float(res.pvalue))


# ---------------------------------------------------------------------------
# Robustness to element errors


@dataclass(frozen=True)
class PerturbationSpec:
    epsilon: float
    targets: tuple = ("states", "kernels", "povms")


def _mix(X: np.ndarray, U: np.ndarray, eps: float, gap: float) -> np.ndarray:
    lam = 0.0 if gap == 0 else min(1.0, eps / gap)
    return (1.0 - lam) * X + lam * U


def _colsum_norm(A: np.ndarray) -> float:
    return float(np.abs(A).sum(axis=0).max())


def _rowsum_norm(A: np.ndarray) -> float:
    return float(np.abs(A).sum(axis=1).max())


def perturb_program(prog: WignerProgram, spec: PerturbationSpec) -> WignerProgram:
    """Mix each targeted element with its uniform counterpart.

    The mixing weight makes the deviation exactly min(epsilon, largest
    possible): entrywise for state and POVM tables, max column sum for
    kernels. Mixtures with the maximally mixed state, the completely
    depolarising channel and the uninformative POVM keep every element a
    valid state, stochastic kernel and POVM table.
    """
    d, eps = prog.d, float(spec.epsilon)
    site_tables = prog.site_tables
    if "states" in spec.targets:
        U = np.full(d * d, 1.0 / (d * d))
        site_tables = tuple(_mix(w, U, eps, float(np.abs(w - U).max())) for w in site_tables)
    kernels = prog.kernels
    if "kernels" in spec.targets:
        new = []
        for K, support in kernels:
            U = np.full(K.matrix.shape, 1.0 / K.matrix.shape[0])
            M = _mix(K.matrix, U, eps, _colsum_norm(K.matrix - U))
            new.append((StochasticKernel(K.d, K.m, M), support))
        kernels = tuple(new)
    povms = prog.povm_tables
    if "povms" in spec.targets:
        new = []
        for T in povms:
            U = np.full(T.table.shape, 1.0 / (d * T.outcomes))
            new.append(PovmWignerTable(d, _mix(T.table, U, eps, float(np.abs(T.table - U).max()))))
        povms = tuple(new)
    return replace(prog, site_tables=site_tables, kernels=kernels, povm_tables=povms)


def perturbation_deviations(prog: WignerProgram, perturbed: WignerProgram) -> dict:
    """Achieved per-element deviations between two programs of the same circuit."""
    return {
        "states": [float(np.abs(a - b).max()) for a, b in zip(prog.site_tables, perturbed.site_tables)],
        "kernels_colsum": [_colsum_norm(a.matrix - b.matrix) for (a, _), (b, _) in zip(prog.kernels, perturbed.kernels)],
        "kernels_rowsum": [_rowsum_norm(a.matrix - b.matrix) for (a, _), (b, _) in zip(prog.kernels, perturbed.kernels)],
        "povms": [float(np.abs(a.table - b.table).max()) for a, b in zip(prog.povm_tables, perturbed.povm_tables)],
    }


@dataclass(frozen=True)
class RobustnessPoint:
    epsilon: float
    linf: float
    outcome_bound: float  # epsilon * (t + 2n)
    state_deviation: float  # sup_r |W^(t) - W'^(t)|
    state_bound: float  # epsilon * (t + n)
    deviations: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.linf / self.outcome_bound if self.outcome_bound else 0.0

    @property
    def within_bounds(self) -> bool:
        return self.linf <= self.outcome_bound + 1e-15 and self.state_deviation <= self.state_bound + 1e-15


@dataclass(frozen=True)
class RobustnessReport:
    n: int
    t: int
    seed: int
    points: tuple

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "seed": self.seed,
            "points": [
                {
                    "epsilon": p.epsilon,
                    "linf": p.linf,
                    "outcome_bound": p.outcome_bound,
                    "ratio": p.ratio,
                    "state_deviation": p.state_deviation,
                    "state_bound": p.state_bound,
                    "within_bounds": p.within_bounds,
                    "deviations": p.deviations,
                }
                for p in self.points
            ],
        }


def robustness_experiment(
    c: Circuit,
    epsilons: Sequence[float],
    seed: int = 0,
    tol: float = 1e-10,
    max_points: int = DEFAULT_MAX_PHASE_POINTS,
) -> RobustnessReport:
    """Exact ||P - P'||_inf and propagated-table deviation for each epsilon.

    The perturbation is deterministic; ``seed`` is carried into the report
    so runs stay labelled consistently with sampling commands.
    """
    prog = compile_to_wigner(c, tol)
    W = propagate_wigner(prog, max_points)
    P = _measure_wigner(W, prog.povm_tables, c.d, c.n)
    points = []
    for eps in epsilons:
        pert = perturb_program(prog, PerturbationSpec(eps))
        W2 = propagate_wigner(pert, max_points)
        P2 = _measure_wigner(W2, pert.povm_tables, c.d, c.n)
        points.append(
            RobustnessPoint(
                epsilon=float(eps),
                linf=float(np.abs(P - P2).max()),
                outcome_bound=float(eps) * (c.t + 2 * c.n),
                state_deviation=float(np.abs(W - W2).max()),
                state_bound=float(eps) * (c.t + c.n),
                deviations=perturbation_deviations(prog, pert),
            )
        )
    return RobustnessReport(c.n, c.t, seed, tuple(points))


# ---------------------------------------------------------------------------
# Random circuits


def haar_unitary(D: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    G = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_kraus(D: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    V = haar_unitary(D * count, rng)[:, :D]
    return [V[i * D : (i + 1) * D] for i in range(count)]


def random_povm(d: int, outcomes: int, rng: np.random.Generator) -> list[np.ndarray]:
    G = [random_density(d, rng) for _ in range(outcomes)]
    S = sum(G)
    evals, evecs = np.linalg.eigh(S)
    S_inv_half = evecs @ np.diag(evals**-0.5) @ evecs.conj().T
    return [S_inv_half @ g @ S_inv_half for g in G]


def random_circuit(d: int, n: int, t: int, rng: np.random.Generator, negative: bool = True) -> Circuit:
    """Random oracle-sized circuit mixing positive and (optionally) negative elements."""
    state_kinds = ["zero", "mixed", "stabilizer", "random_mixed"]
    gate_kinds = ["fourier", "phase", "sum", "displacement", "depolarizing", "weyl_mixture", "dephasing", "multiplier"]
    povm_kinds = ["computational", "fourier", "stabilizer", "uniform"]
    if negative:
        state_kinds += ["haar", "strange"] if d == 3 else ["haar"]
        gate_kinds += ["unitary", "kraus"]
        povm_kinds += ["random"]

    initial = []
    for _ in range(n):
        kind = rng.choice(state_kinds)
        if kind == "stabilizer":
            initial.append(stabilizer_state(int(rng.integers(d + 1)), int(rng.integers(d))))
        elif kind == "random_mixed":
            initial.append(dense_state(random_density(d, rng)))
        elif kind == "haar":
            psi = haar_unitary(d, rng)[:, 0]
            initial.append(dense_state(np.outer(psi, psi.conj())))
        else:
            initial.append(str(kind))

    gates = []
    for _ in range(t):
        kind = str(rng.choice(gate_kinds))
        if kind == "sum" and n < 2:
            kind = "fourier"
        m = 2 if kind == "sum" else (int(rng.integers(1, min(n, 2) + 1)) if kind in ("unitary", "kraus", "depolarizing", "weyl_mixture", "displacement") else 1)
        support = [int(s) for s in rng.permutation(n)[:m]]
        if kind == "displacement":
            gates.append(gate(kind, support, vector=[int(x) for x in rng.integers(d, size=2 * m)]))
        elif kind == "multiplier":
            gates.append(gate(kind, support, a=int(rng.integers(1, d))))
        elif kind == "depolarizing":
            gates.append(gate(kind, support, **{"lambda": float(rng.uniform())}))
        elif kind == "weyl_mixture":
            w = rng.dirichlet(np.ones(3))
            terms = [{"vector": [int(x) for x in rng.integers(d, size=2 * m)], "weight": float(x)} for x in w]
            terms[-1]["weight"] = 1.0 - sum(x["weight"] for x in terms[:-1])
            gates.append(gate(kind, support, terms=terms))
        elif kind == "unitary":
            gates.append(unitary_gate(haar_unitary(d**m, rng), support))
        elif kind == "kraus":
            gates.append(kraus_gate(random_kraus(d**m, 2, rng), support))
        else:
            gates.append(gate(kind, support))

    measurements = []
    for _ in range(n):
        kind = rng.choice(povm_kinds)
        if kind == "stabilizer":
            measurements.append({"type": "stabilizer", "basis": int(rng.integers(d + 1))})
        elif kind == "uniform":
            measurements.append({"type": "uniform", "outcomes": int(rng.integers(1, 4))})
        elif kind == "random":
            measurements.append(dense_povm(random_povm(d, int(rng.integers(2, 4)), rng)))
        else:
            measurements.append(str(kind))
    return Circuit.build(d, initial, gates, measurements)
