"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import json
import time

import numpy as np
import pytest

from conftest import POSITIVE_EXAMPLES, record_criterion
from wignersim.channels import ChannelSpec, channel_kernel
from wignersim.circuit import Circuit, compile_to_wigner, gate, shipped_circuits, state_matrix
from wignersim.cli import run_cli
from wignersim.errors import TooLarge
from wignersim.measurements import (
    computational_povm,
    fourier_povm,
    povm_wigner_table,
    stabilizer_povm,
    stabilizer_projector,
    trivial_povm,
    uniform_povm,
)
from wignersim.oracle import (
    OutcomeDistribution,
    chi_squared_test,
    compare_distributions,
    dense_simulate,
    haar_unitary,
    random_circuit,
    robustness_experiment,
    wigner_chain_distribution,
)
from wignersim.phase_space import wigner_transform
from wignersim.sampler import sample_shots

SHOTS = 100_000
TVD_MAX = 0.02
ALPHA = 1e-3


def sampler_check(c, seed=7):
    start = time.perf_counter()
    prog = compile_to_wigner(c)
    counts = sample_shots(prog, SHOTS, seed=seed)
    P = dense_simulate(c)
    tvd = compare_distributions(OutcomeDistribution.from_counts(c.d, counts, P.shape), P).tvd
    pvalue = chi_squared_test(counts, P).pvalue
    return tvd, pvalue, time.perf_counter() - start


def test_criterion_1_cross_oracle():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, negative = 0.0, 0
    for _ in range(50):
        c = random_circuit(3, int(rng.integers(1, 4)), int(rng.integers(0, 5)), rng)
        prog = compile_to_wigner(c)
        negative += not prog.samplable
        worst = max(worst, float(np.abs(dense_simulate(c).probs - wigner_chain_distribution(prog).probs).max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 60 and negative > 0
    assert record_criterion(1, ok, f"max diff {worst:.2e} over 50 circuits, {negative} with negativity, {elapsed:.2f} s")


def test_criterion_2_sampler_correctness(circuits):
    results = []
    for name in POSITIVE_EXAMPLES:
        c = circuits[name]
        assert c.d == 3 and c.n <= 3 and c.t <= 5
        results.append((name, *sampler_check(c)))
    ok = len(results) >= 5 and all(tvd <= TVD_MAX and p >= ALPHA and s < 30 for _, tvd, p, s in results)
    detail = "; ".join(f"{n} tvd {tvd:.4f} p {p:.3f} {s:.2f} s" for n, tvd, p, s in results)
    assert record_criterion(2, ok, detail)


def test_criterion_3_gottesman_knill(circuits):
    c = circuits["gottesman_knill"]
    kinds = {g["type"] for g in c.gates}
    assert kinds <= {"fourier", "sum", "phase", "displacement"}
    assert all(s["type"] == "stabilizer" for s in c.initial)
    prog = compile_to_wigner(c)
    lowest = min(
        [float(w.min()) for w in prog.site_tables]
        + [float(K.matrix.min()) for K, _ in prog.kernels]
        + [T.min_entry for T in prog.povm_tables]
    )
    raw_lowest = min(e.min_entry for e in prog.audit.elements)
    tvd, pvalue, secs = sampler_check(c)
    ok = lowest >= 0 and raw_lowest >= -1e-12 and tvd <= TVD_MAX and pvalue >= ALPHA
    detail = f"n={c.n}, min entry {lowest:.1e} (raw {raw_lowest:.1e}), tvd {tvd:.4f}, p {pvalue:.3f}"
    assert record_criterion(3, ok, detail)


def preset_states(d):
    specs = [{"type": k} for k in ("zero", "plus", "mixed")]
    specs += [{"type": "stabilizer", "basis": b, "index": x} for b in range(d + 1) for x in range(d)]
    if d == 3:
        specs.append({"type": "strange"})
    return [state_matrix(s, d) for s in specs]


def preset_channels(d):
    return [
        ChannelSpec("identity", 1),
        ChannelSpec("displacement", 1, {"vector": (1, d - 1)}),
        ChannelSpec("displacement", 2, {"vector": (1, 0, 2, 1)}),
        ChannelSpec("fourier", 1),
        ChannelSpec("multiplier", 1, {"a": 2}),
        ChannelSpec("phase", 1),
        ChannelSpec("sum", 2),
        ChannelSpec("depolarizing", 1, {"lambda": 0.3}),
        ChannelSpec("weyl_mixture", 1, {"terms": [((1, 0), 0.5), ((0, 1), 0.5)]}),
        ChannelSpec("dephasing", 1),
    ]


def preset_povms(d):
    return [computational_povm(d), fourier_povm(d), trivial_povm(d), uniform_povm(d, 3)] + [
        stabilizer_povm(d, b) for b in range(d + 1)
    ]


def test_criterion_4_normalisation_sweep():
    worst = {"state": 0.0, "kernel": 0.0, "povm": 0.0}
    for d in (3, 5, 7):
        for rho in preset_states(d):
            worst["state"] = max(worst["state"], abs(wigner_transform(rho, d).total() - 1))
        for spec in preset_channels(d):
            K = channel_kernel(spec, d).matrix
            worst["kernel"] = max(worst["kernel"], float(np.abs(K.sum(axis=0) - 1).max()))
        for elements in preset_povms(d):
            worst["povm"] = max(worst["povm"], povm_wigner_table(elements, d).normalization_error())
    ok = max(worst.values()) <= 1e-9
    assert record_criterion(4, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_5_hudson():
    stab_min = min(wigner_transform(stabilizer_projector(3, b, x), 3).min() for b in range(4) for x in range(3))
    rng = np.random.default_rng(7)
    negative = 0
    for _ in range(100):
        psi = haar_unitary(3, rng)[:, 0]
        negative += wigner_transform(np.outer(psi, psi.conj()), 3).min() < -1e-6
    ok = stab_min >= -1e-12 and negative >= 99
    assert record_criterion(5, ok, f"stabilizer min {stab_min:.1e}, {negative}/100 Haar states negative")


def test_criterion_6_robustness(circuits):
    c = circuits["robustness"]
    assert (c.d, c.n, c.t) == (3, 2, 3)
    start = time.perf_counter()
    small, large = robustness_experiment(c, [1e-3, 1e-2]).points
    elapsed = time.perf_counter() - start
    outcome_ok = all(p.linf <= p.outcome_bound for p in (small, large))
    growth = large.linf / small.linf
    linear_ok = 5 <= growth <= 20
    state_ok = all(p.state_deviation <= p.state_bound for p in (small, large))
    ok = outcome_ok and linear_ok and state_ok and elapsed < 60
    detail = (
        f"linf/(t+2n)eps = {small.ratio:.3f} at 1e-3, {large.ratio:.3f} at 1e-2; "
        f"growth x{growth:.2f}; state deviation {large.state_deviation:.2e} vs {large.state_bound:.2e}"
    )
    assert record_criterion(6, ok, detail)


def scaling_circuit(n, t):
    gates = [gate("depolarizing", [j % n], **{"lambda": 0.1}) for j in range(t)]
    return Circuit.build(3, ["zero"] * n, gates)


def timed_shots(prog, shots, seed):
    start = time.perf_counter()
    sample_shots(prog, shots, seed=seed)
    return time.perf_counter() - start


def test_criterion_7_scaling():
    sizes = [(2, 2), (4, 4), (8, 8), (16, 16)]
    shots = 20_000
    per_shot = []
    for n, t in sizes:
        prog = compile_to_wigner(scaling_circuit(n, t))
        sample_shots(prog, 1000, seed=1)
        per_shot.append(min(timed_shots(prog, shots, seed) for seed in range(3)) / shots)
    x = np.array([n + t for n, t in sizes], dtype=float)
    y = np.array(per_shot)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(slope * x + intercept - y) / y))
    with pytest.raises(TooLarge):
        dense_simulate(scaling_circuit(16, 16))
    ok = residual < 0.2
    times = ", ".join(f"{n + t}: {1e6 * s:.2f} us" for (n, t), s in zip(sizes, per_shot))
    assert record_criterion(7, ok, f"per-shot {times}; max relative residual {residual:.3f}")


def test_criterion_8_negativity_gate(capsys):
    lines = []
    ok = True
    for name in ("strange", "random_unitary"):
        path = str(shipped_circuits()[name])
        code = run_cli(["validate", path])
        report = json.loads(capsys.readouterr().out)
        flagged = [f"{e['kind']} {e['index']}" for e in report["elements"] if e["negative"]]
        exact_code = run_cli(["exact", path])
        exact = json.loads(capsys.readouterr().out)
        ok &= code != 0 and bool(flagged) and exact_code == 0 and exact["max_abs_difference"] <= 1e-10
        lines.append(f"{name}: validate exit {code}, flagged {flagged}, exact diff {exact['max_abs_difference']:.1e}")
    assert record_criterion(8, ok, "; ".join(lines))


def test_criterion_9_reproducibility(capsys):
    path = str(shipped_circuits()["noisy_ghz"])
    outputs = {}
    for threads in (1, 1, 2, 8):
        for fmt in ([], ["--json"]):
            run_cli(["sample", path, "--shots", str(SHOTS), "--seed", "11", "--threads", str(threads)] + fmt)
            outputs.setdefault(bool(fmt), set()).add(capsys.readouterr().out.encode())
    ok = all(len(v) == 1 for v in outputs.values())
    assert record_criterion(9, ok, f"{SHOTS} shots, threads 1/1/2/8, distinct outputs per format: {[len(v) for v in outputs.values()]}")
