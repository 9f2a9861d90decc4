"""Phase-space Monte Carlo sampling of positive-Wigner circuits.

One shot draws a phase point per site from the product input table, moves
the support coordinates of each gate through the gate's kernel column, and
finally draws each site's outcome from its POVM table at the final point.
Every categorical draw is discrete inverse-transform sampling, taken one
coordinate at a time through conditional CDFs.

Randomness: shot ``s`` of seed ``S`` uses row ``s % BLOCK`` of the uniform
matrix drawn from ``SeedSequence(S, spawn_key=(s // BLOCK,))``. Results are
therefore fixed by (program, seed, shot index) no matter how blocks are
scheduled across workers.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import WignerProgram
from .errors import NegativeEntry, NotNormalized, NotSamplable

BLOCK = 8192
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class SampleStream:
    seed: int
    shot_index: int = 0

    def uniforms(self, width: int) -> np.ndarray:
        block, pos = divmod(self.shot_index, BLOCK)
        return _block_uniforms(self.seed, block, pos + 1, width)[pos]


@dataclass(frozen=True)
class Trajectory:
    points: tuple  # t + 1 phase vectors, each a tuple of n (q, p) pairs
    outcome: tuple


def _block_uniforms(seed: int, block: int, count: int, width: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(block,))
    return np.random.Generator(np.random.PCG64(ss)).random((count, width))


# ---------------------------------------------------------------------------
# Inverse transform sampling


def _marginal_levels(table: np.ndarray, base: int, s: int) -> list[np.ndarray]:
    """Prefix marginals of a (rows, base**s) table: level j has shape (rows, base**j)."""
    levels = [table]
    for j in range(s - 1, 0, -1):
        levels.append(levels[-1].reshape(table.shape[0], base**j, base).sum(axis=2))
    return levels[::-1]


def _invert(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Smallest index whose CDF exceeds u * total, row-wise."""
    cdf = np.cumsum(weights, axis=1)
    idx = (cdf <= (u * cdf[:, -1])[:, None]).sum(axis=1)
    return np.minimum(idx, weights.shape[1] - 1)


def _sample_levels(levels: list[np.ndarray], rows: np.ndarray, u: np.ndarray, base: int) -> np.ndarray:
    """Coordinate-by-coordinate draw; u has one column per coordinate."""
    prefix = np.zeros(rows.size, dtype=np.int64)
    offsets = np.arange(base)
    for j, level in enumerate(levels):
        weights = level[rows[:, None], prefix[:, None] * base + offsets]
        prefix = prefix * base + _invert(weights, u[:, j])
    return prefix


def inverse_transform_sample(dist: np.ndarray, uniforms: Sequence[float], d: int) -> tuple[int, ...]:
    """Draw a point of Z_d^s from a normalised nonnegative table.

    ``dist`` is either shaped (d,) * s or flat of length d**s in C order;
    ``uniforms`` supplies one value in [0, 1) per coordinate. Coordinate j
    is the smallest value whose conditional CDF given coordinates < j
    exceeds ``uniforms[j]``.
    """
    dist = np.asarray(dist, dtype=float).reshape(-1)
    s = len(uniforms)
    if dist.size != d**s:
        raise ValueError(f"table of size {dist.size} does not match {s} coordinates over Z_{d}")
    if dist.min() < 0:
        raise NegativeEntry(f"table has negative entry {dist.min():.3e}")
    if abs(dist.sum() - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"table sums to {dist.sum():.12f}")
    levels = _marginal_levels(dist[None, :], d, s)
    flat = _sample_levels(levels, np.zeros(1, dtype=np.int64), np.asarray(uniforms, dtype=float)[None, :], d)[0]
    return tuple(int(x) for x in np.unravel_index(flat, (d,) * s))


# ---------------------------------------------------------------------------
# Sampling plan


@dataclass(frozen=True)
class _Plan:
    d: int
    n: int
    site_levels: tuple
    gate_levels: tuple  # (levels over d**(2m) with rows = input columns, support)
    povm_weights: tuple  # per site: array (d*d, K) of outcome weights
    width: int


def _plan(prog: WignerProgram) -> _Plan:
    if not prog.samplable:
        bad = ", ".join(f"{e.kind} {e.index} (min {e.min_entry:.3e})" for e in prog.audit.negative_elements())
        raise NotSamplable(f"program has negative Wigner elements: {bad}")
    d = prog.d
    site_levels = tuple(_marginal_levels(np.asarray(w)[None, :], d, 2) for w in prog.site_tables)
    gate_levels = tuple(
        (_marginal_levels(np.ascontiguousarray(K.matrix.T), d, 2 * K.m), support) for K, support in prog.kernels
    )
    povm_weights = tuple(np.ascontiguousarray(T.table.T) for T in prog.povm_tables)
    width = 3 * prog.n + sum(2 * K.m for K, _ in prog.kernels)
    return _Plan(d, prog.n, site_levels, gate_levels, povm_weights, width)


def _run(plan: _Plan, u: np.ndarray, record: bool = False):
    """Sample one batch of shots; u has shape (shots, plan.width)."""
    d, n = plan.d, plan.n
    d2 = d * d
    shots = u.shape[0]
    zero_rows = np.zeros(shots, dtype=np.int64)
    col = 0
    sites = np.empty((shots, n), dtype=np.int64)
    for l, levels in enumerate(plan.site_levels):
        sites[:, l] = _sample_levels(levels, zero_rows, u[:, col : col + 2], d)
        col += 2
    history = [sites.copy()] if record else None
    for levels, support in plan.gate_levels:
        m = len(support)
        local = np.zeros(shots, dtype=np.int64)
        for s in support:
            local = local * d2 + sites[:, s]
        drawn = _sample_levels(levels, local, u[:, col : col + 2 * m], d)
        col += 2 * m
        for k, s in enumerate(support):
            sites[:, s] = (drawn // d2 ** (m - 1 - k)) % d2
        if record:
            history.append(sites.copy())
    outcomes = np.empty((shots, n), dtype=np.int64)
    for l, weights in enumerate(plan.povm_weights):
        outcomes[:, l] = _invert(weights[sites[:, l]], u[:, col])
        col += 1
    return outcomes, history


def _check_locality(history: list[np.ndarray], supports: Sequence[tuple]) -> None:
    for j, support in enumerate(supports):
        others = [l for l in range(history[j].shape[1]) if l not in support]
        if not np.array_equal(history[j][:, others], history[j + 1][:, others]):
            raise AssertionError(f"gate {j} changed coordinates outside its support {support}")


def sample_run(prog: WignerProgram, stream: SampleStream) -> Trajectory:
    """One shot, with its full phase-space trajectory."""
    plan = _plan(prog)
    u = stream.uniforms(plan.width)[None, :]
    outcomes, history = _run(plan, u, record=True)
    _check_locality(history, [s for _, s in plan.gate_levels])
    d = prog.d
    points = tuple(tuple((int(x) // d, int(x) % d) for x in h[0]) for h in history)
    return Trajectory(points, tuple(int(k) for k in outcomes[0]))


def _block_counts(plan: _Plan, seed: int, block: int, count: int, debug: bool) -> Counter:
    u = _block_uniforms(seed, block, count, plan.width)
    outcomes, history = _run(plan, u, record=debug)
    if debug:
        _check_locality(history, [s for _, s in plan.gate_levels])
    rows, counts = np.unique(outcomes, axis=0, return_counts=True)
    return Counter({tuple(int(k) for k in row): int(c) for row, c in zip(rows, counts)})


def sample_shots(
    prog: WignerProgram, shots: int, seed: int = 0, threads: int = 1, debug: bool = False
) -> dict[tuple, int]:
    """Outcome counts for ``shots`` independent runs, keyed by outcome tuple.

    Output depends only on (prog, shots, seed); ``threads`` changes
    scheduling, not results. ``debug`` asserts per-shot locality.
    """
    if shots < 0:
        raise ValueError("shots must be nonnegative")
    plan = _plan(prog)
    blocks = [(b, min(BLOCK, shots - b * BLOCK)) for b in range(-(-shots // BLOCK))]
    total: Counter = Counter()
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(lambda bc: _block_counts(plan, seed, bc[0], bc[1], debug), blocks)
            for part in parts:
                total.update(part)
    else:
        for b, count in blocks:
            total.update(_block_counts(plan, seed, b, count, debug))
    return dict(sorted(total.items()))
