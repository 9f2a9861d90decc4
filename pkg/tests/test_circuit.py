import json

import numpy as np
import pytest

from conftest import POSITIVE_EXAMPLES, brute_wigner
from wignersim.circuit import (
    Circuit,
    audit,
    compile_to_wigner,
    dense_state,
    gate,
    parse_circuit,
    serialize_circuit,
    stabilizer_state,
    state_matrix,
    unitary_gate,
)
from wignersim.errors import DimensionNotOddPrime, DuplicateSite, ParseError, SupportError, SupportOutOfRange
from wignersim.oracle import haar_unitary

MINIMAL = {
    "format": 1,
    "d": 3,
    "n": 1,
    "initial": ["zero"],
    "gates": [],
    "measurements": ["computational"],
}


def doc(**changes):
    obj = json.loads(json.dumps(MINIMAL))
    obj.update(changes)
    return json.dumps(obj)


# --- parsing ----------------------------------------------------------------


def test_minimal_file():
    c = parse_circuit(doc())
    assert (c.d, c.n, c.t) == (3, 1, 0)
    assert c.initial == ({"type": "zero"},)


def test_duplicate_support():
    text = doc(n=2, initial=["zero", "zero"], measurements=["computational"] * 2, gates=[{"type": "sum", "support": [0, 0]}])
    with pytest.raises(DuplicateSite, match=r"gates\[0\]\.support"):
        parse_circuit(text)


def test_out_of_range_support():
    with pytest.raises(SupportOutOfRange):
        parse_circuit(doc(gates=[{"type": "fourier", "support": [1]}]))


def test_even_dimension_rejected():
    with pytest.raises(DimensionNotOddPrime):
        parse_circuit(doc(d=4))


def test_json_syntax_error_reports_position():
    with pytest.raises(ParseError, match="line 2"):
        parse_circuit('{"format": 1,\n "d": }')


@pytest.mark.parametrize(
    "changes, where",
    [
        ({"extra": 1}, "top-level"),
        ({"format": 2}, "format"),
        ({"n": 2}, "initial"),
        ({"initial": [{"type": "zero", "colour": "red"}]}, r"initial\[0\]"),
        ({"initial": [{"type": "stabilizer", "basis": 1}]}, r"initial\[0\]"),
        ({"initial": ["bogus"]}, r"initial\[0\]"),
        ({"gates": [{"type": "fourier"}]}, r"gates\[0\]"),
        ({"gates": [{"type": "depolarizing", "support": [0], "lambda": 1.5}]}, r"gates\[0\]"),
        ({"gates": [{"type": "unitary", "support": [0], "matrix": [[[1, 0]]]}]}, r"gates\[0\]"),
        ({"measurements": [{"type": "uniform"}]}, r"measurements\[0\]"),
        ({"d": "3"}, "d"),
    ],
)
def test_parse_errors_name_the_field(changes, where):
    with pytest.raises(ParseError, match=where):
        parse_circuit(doc(**changes))


def test_non_density_state_rejected():
    with pytest.raises(ParseError, match="NotDensityMatrix"):
        parse_circuit(doc(initial=[dense_state(np.diag([2.0, -1.0, 0.0]))]))


def test_support_cap():
    n = 4
    text = doc(n=n, initial=["zero"] * n, measurements=["computational"] * n,
               gates=[gate("identity", [0, 1, 2, 3])])
    with pytest.raises(SupportError):
        parse_circuit(text)
    assert parse_circuit(text, max_support=4).t == 1


def test_build_defaults_to_computational_measurement():
    c = Circuit.build(3, ["zero", "plus"], [gate("sum", [0, 1])])
    assert c.measurements == ({"type": "computational"},) * 2
    assert c.t == 1


def test_serialisation_roundtrip_shipped(circuits):
    for name, c in circuits.items():
        assert parse_circuit(serialize_circuit(c)) == c, name


def test_serialisation_roundtrip_dense(rng):
    c = Circuit.build(3, [dense_state(np.eye(3) / 3), stabilizer_state(2, 1)], [unitary_gate(haar_unitary(9, rng), [1, 0])])
    again = parse_circuit(serialize_circuit(c))
    assert again == c
    assert serialize_circuit(again) == serialize_circuit(c)


# --- compilation ------------------------------------------------------------


def test_compile_example():
    c = Circuit.build(3, ["zero", "mixed"], [gate("depolarizing", [0], **{"lambda": 0.25})])
    prog = compile_to_wigner(c)
    assert prog.samplable
    assert min(w.min() for w in prog.site_tables) >= 0
    assert min(K.matrix.min() for K, _ in prog.kernels) >= 0
    assert np.abs(prog.site_tables[1] - 1 / 9).max() < 1e-15


def test_strange_state_negative(circuits):
    rho = state_matrix({"type": "strange"}, 3)
    oracle = brute_wigner(rho, 3).real
    assert oracle.min() == pytest.approx(-1 / 3)
    prog = compile_to_wigner(circuits["strange"])
    assert not prog.samplable
    states = [e for e in prog.audit.negative_elements() if e.kind == "state"]
    assert states and states[0].min_entry == pytest.approx(-1 / 3)


def test_t_zero_program(circuits):
    prog = compile_to_wigner(circuits["minimal"])
    assert prog.t == 0 and prog.kernels == ()


def test_audit_examples(circuits):
    for e in audit(circuits["gottesman_knill"]).elements:
        assert e.min_entry >= -1e-12
    flagged = audit(circuits["random_unitary"]).negative_elements()
    assert any(e.kind == "gate" for e in flagged)
    c = Circuit.build(3, ["zero", "plus"], [], ["trivial", "trivial"])
    prog = compile_to_wigner(c)
    for T in prog.povm_tables:
        assert np.abs(T.table - 1 / 3).max() < 1e-15


def test_report_dict(circuits):
    rep = audit(circuits["random_unitary"]).to_dict()
    assert rep["samplable"] is False
    assert [e["kind"] for e in rep["elements"]] == ["state"] * 2 + ["gate"] * 3 + ["povm"] * 2
    assert sum(e["negative"] for e in rep["elements"]) >= 1
    json.dumps(rep)


def test_compilation_deterministic(circuits):
    for name in POSITIVE_EXAMPLES:
        text = serialize_circuit(circuits[name])
        a, b = compile_to_wigner(parse_circuit(text)), compile_to_wigner(parse_circuit(text))
        for x, y in zip(a.site_tables, b.site_tables):
            assert x.tobytes() == y.tobytes()
        for (K1, s1), (K2, s2) in zip(a.kernels, b.kernels):
            assert s1 == s2 and K1.matrix.tobytes() == K2.matrix.tobytes()
        for T1, T2 in zip(a.povm_tables, b.povm_tables):
            assert T1.table.tobytes() == T2.table.tobytes()


def test_program_arrays_are_read_only(circuits):
    prog = compile_to_wigner(circuits["noisy_ghz"])
    with pytest.raises(ValueError):
        prog.site_tables[0][0] = 1.0


def dusty_state(delta):
    # |1><1| mixed with a little strange state: W(0, 0) = -delta / 3
    one = np.diag([0.0, 1.0, 0.0]).astype(complex)
    return (1 - delta) * one + delta * state_matrix({"type": "strange"}, 3)


def test_clipping_bound():
    tol = 1e-10
    c = Circuit.build(3, [dense_state(dusty_state(1.5e-10)), "zero"], [gate("fourier", [0]), gate("depolarizing", [1], **{"lambda": 0.5})])
    prog = compile_to_wigner(c, tol)
    assert prog.samplable
    raw = brute_wigner(dusty_state(1.5e-10), 3).real
    assert raw.min() == pytest.approx(-5e-11, rel=1e-3)
    clipped = prog.site_tables[0]
    assert clipped.min() >= 0
    assert np.abs(clipped - raw).max() <= tol
    assert abs(clipped.sum() - 1) < 1e-9
    for K, _ in prog.kernels:
        assert np.abs(K.matrix.sum(axis=0) - 1).max() < 1e-9
    for T in prog.povm_tables:
        assert T.normalization_error() < 1e-9
    # the audit keeps the pre-clip value, and a tighter tolerance refuses it
    assert prog.audit.elements[0].min_entry < 0
    assert not compile_to_wigner(c, 1e-12).samplable


def test_clipping_preserves_positive_examples(circuits):
    for name in POSITIVE_EXAMPLES:
        c = circuits[name]
        prog = compile_to_wigner(c)
        assert prog.samplable
        for w, s in zip(prog.site_tables, c.initial):
            assert np.abs(w - brute_wigner(state_matrix(s, 3), 3).real).max() <= 1e-10
