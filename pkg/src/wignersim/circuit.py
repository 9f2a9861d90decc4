"""Circuit description, JSON file format, compilation and negativity audit.

A circuit file is a JSON object::

    {
      "format": 1,
      "d": 3,
      "n": 2,
      "initial": ["zero", {"type": "stabilizer", "basis": 1, "index": 0}],
      "gates": [{"type": "sum", "support": [0, 1]},
                {"type": "depolarizing", "support": [1], "lambda": 0.2}],
      "measurements": ["computational", "fourier"]
    }

Complex matrices are row-major nested arrays of ``[re, im]`` pairs. Unknown
fields are rejected. Presets may be written as a bare string when they take
no parameters; the parsed circuit always holds the object form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import channels as ch
from .channels import ChannelSpec, StochasticKernel
from .errors import (
    DimensionNotOddPrime,
    DuplicateSite,
    NotDensityMatrix,
    ParseError,
    SupportError,
    SupportOutOfRange,
    WignerSimError,
)
from .measurements import (
    PovmWignerTable,
    computational_povm,
    fourier_povm,
    povm_wigner_table,
    stabilizer_povm,
    stabilizer_projector,
    trivial_povm,
    uniform_povm,
)
from .phase_space import dimension, wigner_values

FORMAT_VERSION = 1
DEFAULT_TOL = 1e-10
DEFAULT_MAX_SUPPORT = 3
STATE_TOL = 1e-9

STATE_FIELDS = {
    "zero": set(),
    "plus": set(),
    "mixed": set(),
    "strange": set(),
    "stabilizer": {"basis", "index"},
    "dense": {"matrix"},
}
GATE_FIELDS = {
    "identity": set(),
    "displacement": {"vector"},
    "fourier": set(),
    "multiplier": {"a"},
    "phase": set(),
    "sum": set(),
    "depolarizing": {"lambda"},
    "weyl_mixture": {"terms"},
    "dephasing": set(),
    "unitary": {"matrix"},
    "kraus": {"operators"},
    "choi": {"matrix"},
    "clifford": {"symplectic", "displacement"},
}
POVM_FIELDS = {
    "computational": set(),
    "fourier": set(),
    "trivial": set(),
    "uniform": {"outcomes"},
    "stabilizer": {"basis"},
    "dense": {"elements"},
}
OPTIONAL_FIELDS = {("povm", "dense"): {"projective"}}
TOP_LEVEL = {"format", "d", "n", "initial", "gates", "measurements"}


# ---------------------------------------------------------------------------
# Matrix encoding


def encode_matrix(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def decode_matrix(obj: Any, where: str = "matrix") -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("matrix must be a nested array of [re, im] pairs", where) from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ParseError(f"expected a square matrix of [re, im] pairs, got array shape {arr.shape}", where)
    if not np.all(np.isfinite(arr)):
        raise ParseError("matrix entries must be finite", where)
    return arr[..., 0] + 1j * arr[..., 1]


# ---------------------------------------------------------------------------
# Spec builders for programmatic use


def dense_state(rho: np.ndarray) -> dict:
    return {"type": "dense", "matrix": encode_matrix(rho)}


def stabilizer_state(basis: int, index: int) -> dict:
    return {"type": "stabilizer", "basis": basis, "index": index}


def gate(kind: str, support: Sequence[int], **params) -> dict:
    return {"type": kind, "support": list(support), **params}


def unitary_gate(U: np.ndarray, support: Sequence[int]) -> dict:
    return gate("unitary", support, matrix=encode_matrix(U))


def kraus_gate(ops: Sequence[np.ndarray], support: Sequence[int]) -> dict:
    return gate("kraus", support, operators=[encode_matrix(K) for K in ops])


def dense_povm(elements: Sequence[np.ndarray]) -> dict:
    return {"type": "dense", "elements": [encode_matrix(M) for M in elements]}


# ---------------------------------------------------------------------------
# Realisation of specs


def state_matrix(spec: Mapping, d: int) -> np.ndarray:
    kind = spec["type"]
    if kind == "zero":
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    if kind == "plus":
        return np.full((d, d), 1.0 / d, dtype=complex)
    if kind == "mixed":
        return np.eye(d, dtype=complex) / d
    if kind == "strange":
        if d != 3:
            raise ValueError("the strange state is defined for d = 3 only")
        psi = np.array([0.0, 1.0, -1.0]) / np.sqrt(2.0)
        return np.outer(psi, psi).astype(complex)
    if kind == "stabilizer":
        return stabilizer_projector(d, int(spec["basis"]), int(spec["index"]))
    if kind == "dense":
        return decode_matrix(spec["matrix"])
    raise ValueError(f"unknown state type {kind!r}")


def gate_channel(g: Mapping) -> ChannelSpec:
    kind = g["type"]
    params = {k: v for k, v in g.items() if k not in ("type", "support")}
    if kind in ("unitary", "choi"):
        params["matrix"] = decode_matrix(params["matrix"])
    elif kind == "kraus":
        params["operators"] = [decode_matrix(K) for K in params["operators"]]
    elif kind == "weyl_mixture":
        params["terms"] = [(t["vector"], t["weight"]) for t in params["terms"]]
    elif kind == "clifford":
        params["symplectic"] = np.array(params["symplectic"], dtype=np.int64)
    return ChannelSpec(kind, len(g["support"]), params)


def povm_elements(spec: Mapping, d: int) -> list[np.ndarray]:
    kind = spec["type"]
    if kind == "computational":
        return computational_povm(d)
    if kind == "fourier":
        return fourier_povm(d)
    if kind == "trivial":
        return trivial_povm(d)
    if kind == "uniform":
        return uniform_povm(d, int(spec["outcomes"]))
    if kind == "stabilizer":
        return stabilizer_povm(d, int(spec["basis"]))
    if kind == "dense":
        return [decode_matrix(M) for M in spec["elements"]]
    raise ValueError(f"unknown measurement type {kind!r}")


def check_density_matrix(rho: np.ndarray, d: int) -> None:
    if rho.shape != (d, d):
        raise NotDensityMatrix(f"initial states are single-site ({d}x{d}); got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > STATE_TOL:
        raise NotDensityMatrix("state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > STATE_TOL:
        raise NotDensityMatrix("state does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -STATE_TOL:
        raise NotDensityMatrix("state has a negative eigenvalue")


# ---------------------------------------------------------------------------
# Circuit


@dataclass(frozen=True, eq=False)
class Circuit:
    """Validated circuit held in canonical (object-form) JSON values."""

    d: int
    n: int
    initial: tuple
    gates: tuple
    measurements: tuple
    max_support: int = field(default=DEFAULT_MAX_SUPPORT, repr=False)

    @property
    def t(self) -> int:
        return len(self.gates)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "d": self.d,
            "n": self.n,
            "initial": [dict(s) for s in self.initial],
            "gates": [dict(g) for g in self.gates],
            "measurements": [dict(m) for m in self.measurements],
        }

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    @classmethod
    def from_dict(cls, obj: Any, max_support: int = DEFAULT_MAX_SUPPORT) -> "Circuit":
        return circuit_from_dict(obj, max_support=max_support)

    @classmethod
    def build(
        cls,
        d: int,
        initial: Iterable,
        gates: Iterable = (),
        measurements: Iterable | None = None,
        max_support: int = DEFAULT_MAX_SUPPORT,
    ) -> "Circuit":
        initial = list(initial)
        if measurements is None:
            measurements = ["computational"] * len(initial)
        obj = {
            "format": FORMAT_VERSION,
            "d": d,
            "n": len(initial),
            "initial": initial,
            "gates": list(gates),
            "measurements": list(measurements),
        }
        return circuit_from_dict(json.loads(json.dumps(obj)), max_support=max_support)


def _canonical(spec: Any, table: Mapping[str, set], where: str, group: str) -> dict:
    if isinstance(spec, str):
        spec = {"type": spec}
    if not isinstance(spec, dict):
        raise ParseError("expected a preset name or an object", where)
    kind = spec.get("type")
    if kind not in table:
        raise ParseError(f"unknown type {kind!r}; expected one of {sorted(table)}", where)
    allowed = table[kind] | OPTIONAL_FIELDS.get((group, kind), set()) | {"type"}
    if group == "gate":
        allowed |= {"support"}
    extra = set(spec) - allowed
    if extra:
        raise ParseError(f"unknown field(s) {sorted(extra)}", where)
    missing = table[kind] - set(spec)
    if group == "gate" and "support" not in spec:
        missing |= {"support"}
    if missing:
        raise ParseError(f"missing field(s) {sorted(missing)}", where)
    return dict(spec)


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"expected an integer, got {value!r}", where)
    return value


def circuit_from_dict(obj: Any, max_support: int = DEFAULT_MAX_SUPPORT) -> Circuit:
    if not isinstance(obj, dict):
        raise ParseError("circuit document must be a JSON object")
    extra = set(obj) - TOP_LEVEL
    if extra:
        raise ParseError(f"unknown top-level field(s) {sorted(extra)}")
    missing = TOP_LEVEL - set(obj)
    if missing:
        raise ParseError(f"missing top-level field(s) {sorted(missing)}")
    if obj["format"] != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {obj['format']!r}", "format")
    d = _int(obj["d"], "d")
    try:
        dimension(d)
    except DimensionNotOddPrime as exc:
        raise DimensionNotOddPrime(f"d: {exc}") from None
    n = _int(obj["n"], "n")
    if n < 1:
        raise ParseError("need at least one site", "n")
    for key in ("initial", "gates", "measurements"):
        if not isinstance(obj[key], list):
            raise ParseError("expected an array", key)
    if len(obj["initial"]) != n:
        raise ParseError(f"expected {n} initial states, got {len(obj['initial'])}", "initial")
    if len(obj["measurements"]) != n:
        raise ParseError(f"expected {n} measurements, got {len(obj['measurements'])}", "measurements")

    initial = []
    for i, s in enumerate(obj["initial"]):
        where = f"initial[{i}]"
        spec = _canonical(s, STATE_FIELDS, where, "state")
        _guard(lambda: check_density_matrix(state_matrix(spec, d), d), where)
        initial.append(spec)

    gates = []
    for i, g in enumerate(obj["gates"]):
        where = f"gates[{i}]"
        spec = _canonical(g, GATE_FIELDS, where, "gate")
        support = spec["support"]
        if not isinstance(support, list) or not support:
            raise ParseError("support must be a non-empty array of site indices", f"{where}.support")
        support = [_int(s, f"{where}.support") for s in support]
        try:
            ch.check_support(support, n)
        except (DuplicateSite, SupportOutOfRange) as exc:
            raise type(exc)(f"{where}.support: {exc}") from None
        if len(support) > max_support:
            raise SupportError(f"{where}.support: {len(support)} sites exceeds the cap of {max_support}")
        spec["support"] = support
        _guard(lambda: ch.validate_channel(gate_channel(spec), d), where)
        gates.append(spec)

    measurements = []
    for i, mspec in enumerate(obj["measurements"]):
        where = f"measurements[{i}]"
        spec = _canonical(mspec, POVM_FIELDS, where, "povm")
        projective = spec.get("projective", False)
        if not isinstance(projective, bool):
            raise ParseError("projective must be a boolean", f"{where}.projective")
        _guard(lambda: povm_wigner_table(povm_elements(spec, d), d, projective=projective), where)
        measurements.append(spec)

    return Circuit(d, n, tuple(initial), tuple(gates), tuple(measurements), max_support)


def _guard(check, where: str) -> None:
    try:
        check()
    except ParseError:
        raise
    except (WignerSimError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"{type(exc).__name__}: {exc}", where) from None


def parse_circuit(text: str, max_support: int = DEFAULT_MAX_SUPPORT) -> Circuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    return circuit_from_dict(obj, max_support=max_support)


def load_circuit(path: str | Path, max_support: int = DEFAULT_MAX_SUPPORT) -> Circuit:
    return parse_circuit(Path(path).read_text(encoding="utf-8"), max_support=max_support)


def serialize_circuit(c: Circuit) -> str:
    return json.dumps(c.to_dict(), indent=2) + "\n"


def shipped_circuits() -> dict[str, Path]:
    """Example circuit files bundled with the package, keyed by stem."""
    root = resources.files("wignersim") / "circuits"
    return {Path(p.name).stem: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")}


# ---------------------------------------------------------------------------
# Compilation


@dataclass(frozen=True)
class ElementNegativity:
    kind: str  # "state" | "gate" | "povm"
    index: int
    min_entry: float
    negative_mass: float


@dataclass(frozen=True)
class NegativityReport:
    elements: tuple
    tol: float

    @property
    def samplable(self) -> bool:
        return all(e.min_entry >= -self.tol for e in self.elements)

    def negative_elements(self) -> list[ElementNegativity]:
        return [e for e in self.elements if e.min_entry < -self.tol]

    def to_dict(self) -> dict:
        return {
            "samplable": self.samplable,
            "tol": self.tol,
            "elements": [
                {
                    "kind": e.kind,
                    "index": e.index,
                    "min_entry": e.min_entry,
                    "negative_mass": e.negative_mass,
                    "negative": e.min_entry < -self.tol,
                }
                for e in self.elements
            ],
        }


@dataclass(frozen=True)
class WignerProgram:
    d: int
    n: int
    site_tables: tuple  # n arrays of length d*d
    kernels: tuple  # t pairs (StochasticKernel, support)
    povm_tables: tuple  # n PovmWignerTable
    audit: NegativityReport

    @property
    def t(self) -> int:
        return len(self.kernels)

    @property
    def samplable(self) -> bool:
        return self.audit.samplable


def _raw_elements(c: Circuit):
    states = [wigner_values(state_matrix(s, c.d), c.d)[0] for s in c.initial]
    kernels = [(ch.channel_kernel(gate_channel(g), c.d), tuple(g["support"])) for g in c.gates]
    povms = [
        povm_wigner_table(povm_elements(m, c.d), c.d, projective=m.get("projective", False))
        for m in c.measurements
    ]
    return states, kernels, povms


def _report(states, kernels, povms, tol: float) -> NegativityReport:
    elements = [ElementNegativity("state", i, float(w.min()), float(np.maximum(-w, 0).sum())) for i, w in enumerate(states)]
    elements += [ElementNegativity("gate", j, K.min_entry, K.negative_mass) for j, (K, _) in enumerate(kernels)]
    elements += [ElementNegativity("povm", l, T.min_entry, T.negative_mass) for l, T in enumerate(povms)]
    return NegativityReport(tuple(elements), tol)


def audit(c: Circuit, tol: float = DEFAULT_TOL) -> NegativityReport:
    return _report(*_raw_elements(c), tol)


def _clip(values: np.ndarray, tol: float) -> np.ndarray:
    out = values.copy()
    out[(out < 0) & (out >= -tol)] = 0.0
    return out


def compile_to_wigner(c: Circuit, tol: float = DEFAULT_TOL) -> WignerProgram:
    """Compute all Wigner tables and kernels, clipping numerical dust.

    Entries in [-tol, 0) are set to zero and the element renormalised
    (state tables to unit sum, kernel columns to unit sum, POVM slices to
    d * sum_k T = 1). Larger negativity is kept and makes the program
    unsamplable; the audit records values from before clipping.
    """
    states, kernels, povms = _raw_elements(c)
    report = _report(states, kernels, povms, tol)

    site_tables = []
    for w in states:
        w = _clip(w, tol)
        w = w / w.sum()
        w.setflags(write=False)
        site_tables.append(w)

    clipped_kernels = []
    for K, support in kernels:
        M = _clip(K.matrix, tol)
        M = M / M.sum(axis=0, keepdims=True)
        M.setflags(write=False)
        clipped_kernels.append((StochasticKernel(K.d, K.m, M), support))

    clipped_povms = []
    for T in povms:
        tab = _clip(T.table, tol)
        tab = tab / (c.d * tab.sum(axis=0, keepdims=True))
        tab.setflags(write=False)
        clipped_povms.append(PovmWignerTable(T.d, tab))

    return WignerProgram(c.d, c.n, tuple(site_tables), tuple(clipped_kernels), tuple(clipped_povms), report)
