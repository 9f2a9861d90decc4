import itertools
from functools import reduce

import numpy as np
import pytest

from wignersim.circuit import load_circuit, shipped_circuits
from wignersim.phase_space import phase_point_operator

POSITIVE_EXAMPLES = [
    "stabilizer_sum",
    "depolarizing_fourier",
    "displacement_mixture",
    "gottesman_knill",
    "noisy_ghz",
    "multiplier_clifford",
]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def circuits():
    return {name: load_circuit(path) for name, path in shipped_circuits().items()}


def random_hermitian(D, rng):
    X = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    return (X + X.conj().T) / 2


def brute_wigner(O, d):
    """d**-m tr(A(r_1) (x) ... (x) A(r_m) O) by explicit Kronecker products, point by point."""
    m = round(np.log(O.shape[0]) / np.log(d))
    out = []
    for r in itertools.product(range(d), repeat=2 * m):
        A = reduce(np.kron, [phase_point_operator(d, r[2 * k], r[2 * k + 1]) for k in range(m)], np.eye(1))
        out.append(np.trace(A @ O) / d**m)
    return np.array(out)


def brute_kernel(kraus, d):
    """Column r_in is the Wigner table of F(A(r_in)) for the channel with the given Kraus operators.

    Follows from rho = sum_r W(r) A(r) and linearity; uses no Choi matrix.
    """
    D = kraus[0].shape[0]
    m = round(np.log(D) / np.log(d))
    cols = []
    for r in itertools.product(range(d), repeat=2 * m):
        A = reduce(np.kron, [phase_point_operator(d, r[2 * k], r[2 * k + 1]) for k in range(m)], np.eye(1))
        FA = sum(K @ A @ K.conj().T for K in kraus)
        cols.append(brute_wigner(FA, d).real)
    return np.array(cols).T


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
