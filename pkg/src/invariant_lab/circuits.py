"""Cycle-test circuits: construction, exact simulation, shots and export.

A cycle test of order ``n`` is a Hadamard test on one ancilla qubit whose
controlled block is the cyclic shift of ``n`` system registers, built from
``n - 1`` controlled-SWAPs. With the phase gate ``diag(1, i**s)`` after the
block the ancilla reads ``p0 = (1 + Re[i**s * Delta_n]) / 2``, where
``Delta_n = Tr(rho_1 ... rho_n)`` in input order.

The controlled-SWAPs are applied in time order SWAP(1,2), SWAP(2,3), ...,
SWAP(n-1,n). Their product ``SWAP(n-1,n) ... SWAP(1,2)`` maps
``|x1, ..., xn>`` to ``|xn, x1, ..., x_{n-1}>``, whose expectation in
``rho_1 x ... x rho_n`` is ``Tr(rho_1 rho_2 ... rho_n)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DimensionMismatchError, UnsupportedFormatError, ValidationError
from .invariants import evolve_generator
from .states import PureState, SeedLike, as_operator, make_rng, spawn_rngs, states_from

ANCILLA = 0


@dataclass(frozen=True)
class Wire:
    label: str
    dim: int


@dataclass(frozen=True)
class Hadamard:
    wire: int


@dataclass(frozen=True)
class Phase:
    s: int
    wire: int


@dataclass(frozen=True)
class ControlledSwap:
    control: int
    wire_a: int
    wire_b: int


@dataclass(frozen=True, eq=False)
class ApplyUnitary:
    wire: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("ApplyUnitary needs a square matrix")
        if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) > 1e-10:
            raise ValidationError("ApplyUnitary matrix is not unitary within 1e-10")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


Gate = Hadamard | Phase | ControlledSwap | ApplyUnitary


@dataclass(frozen=True)
class CircuitIR:
    """Wires (wire 0 is the ancilla qubit), gates in time order, ancilla-Z readout."""

    wires: tuple
    gates: tuple
    measure: str = "ancilla-z"

    def __post_init__(self):
        wires = tuple(w if isinstance(w, Wire) else Wire(*w) for w in self.wires)
        gates = tuple(self.gates)
        object.__setattr__(self, "wires", wires)
        object.__setattr__(self, "gates", gates)
        if len(wires) < 2 or wires[0].dim != 2:
            raise ValidationError("wire 0 must be a qubit ancilla followed by system wires")
        if self.measure != "ancilla-z":
            raise ValidationError(f"unsupported measurement {self.measure!r}")
        n = len(wires)
        for g in gates:
            if isinstance(g, ControlledSwap):
                if g.control != ANCILLA:
                    raise ValidationError("controlled-SWAP must be controlled by the ancilla")
                if not (0 < g.wire_a < n and 0 < g.wire_b < n) or g.wire_a == g.wire_b:
                    raise ValidationError("controlled-SWAP targets must be distinct system wires")
                if wires[g.wire_a].dim != wires[g.wire_b].dim:
                    raise DimensionMismatchError("controlled-SWAP targets need equal dims")
            elif isinstance(g, (Hadamard, Phase)):
                if g.wire != ANCILLA:
                    raise ValidationError("Hadamard/Phase act on the ancilla only")
                if isinstance(g, Phase) and g.s not in (0, 1):
                    raise ValidationError("Phase s must be 0 or 1")
            elif isinstance(g, ApplyUnitary):
                if not 0 < g.wire < n or wires[g.wire].dim != g.matrix.shape[0]:
                    raise DimensionMismatchError("ApplyUnitary does not fit its wire")
            else:
                raise ValidationError(f"unknown gate {g!r}")
        h = [k for k, g in enumerate(gates) if isinstance(g, Hadamard)]
        cs = [k for k, g in enumerate(gates) if isinstance(g, ControlledSwap)]
        if len(h) != 2 or (cs and not h[0] < min(cs) <= max(cs) < h[1]):
            raise ValidationError("need exactly two ancilla Hadamards bracketing the controlled block")

    @property
    def system_dims(self) -> tuple:
        return tuple(w.dim for w in self.wires[1:])

    @property
    def s(self) -> int:
        return next((g.s for g in self.gates if isinstance(g, Phase)), 0)


@dataclass(frozen=True)
class ShotRecord:
    shots: int
    count0: int
    count1: int
    s: int
    seed: object = None

    def __post_init__(self):
        if self.count0 + self.count1 != self.shots:
            raise ValidationError("count0 + count1 must equal shots")

    @property
    def frequency0(self) -> float:
        return self.count0 / self.shots


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------


def _check_s(s):
    if s not in (0, 1):
        raise ValidationError("s must be 0 or 1")


def _cycle(labels: Sequence[str], dim: int, s: int, prep: Sequence = ()) -> CircuitIR:
    _check_s(s)
    if dim < 2:
        raise ValidationError("system dimension must be >= 2")
    n = len(labels)
    wires = (Wire("anc", 2),) + tuple(Wire(lab, dim) for lab in labels)
    gates = list(prep) + [Hadamard(ANCILLA)]
    gates += [ControlledSwap(ANCILLA, k, k + 1) for k in range(1, n)]
    if s == 1:
        gates.append(Phase(1, ANCILLA))
    gates.append(Hadamard(ANCILLA))
    return CircuitIR(wires, tuple(gates))


def build_cycle_test(n: int, dim: int, s: int) -> CircuitIR:
    """Hadamard test of the ``n``-cycle on ``n`` registers of dimension ``dim``.

    ``s = 0`` is emitted without a phase gate because ``diag(1, 1)`` is the
    identity.
    """
    if n < 1:
        raise ValidationError("order n must be >= 1")
    return _cycle([f"s{k}" for k in range(1, n + 1)], dim, s)


def build_kd_circuit(dim: int, s: int) -> CircuitIR:
    """Inputs ``(|i>, rho, |f>)``; target ``Delta_3 = <f|i><i|rho|f>``."""
    return _cycle(["i", "rho", "f"], dim, s)


def build_weak_value_circuits(dim: int, s: int) -> tuple[CircuitIR, CircuitIR]:
    """Numerator circuit on ``(phi, a, psi)`` and the SWAP test on ``(phi, psi)``."""
    return _cycle(["phi", "a", "psi"], dim, s), _cycle(["phi", "psi"], dim, 0)


def build_psqfi_circuit(dim: int, s: int, theta: float, generator) -> CircuitIR:
    """Inputs ``(|i>, psi, |i'>, |f>)`` with ``exp(-i theta I)`` applied to ``psi``."""
    u = evolve_generator(generator, theta)
    return _cycle(["i", "psi", "i2", "f"], dim, s, prep=[ApplyUnitary(2, u)])


def build_otoc_circuit(dim: int, s: int, U) -> CircuitIR:
    """Inputs ``(|w3>, |v2>, |w2>, |v1>, rho)``; ``U`` evolves wires 2, 4 and 5.

    The target is ``Delta_5(|w3>, U|v2>, |w2>, U|v1>, U rho U^dag)``, one
    entry of the fine-grained OTOC quasiprobability.
    """
    prep = [ApplyUnitary(k, U) for k in (2, 4, 5)]
    return _cycle(["w3", "v2", "w2", "v1", "rho"], dim, s, prep=prep)


# --------------------------------------------------------------------------
# exact simulation
# --------------------------------------------------------------------------


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def _apply_matrix(t: np.ndarray, m: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(m, t, axes=(1, axis)), 0, axis)


def _anc1(ndim: int, axis: int) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = 1
    return tuple(idx)


def _swap_where_ancilla_set(t: np.ndarray, anc_axis: int, a: int, b: int) -> np.ndarray:
    # Permute axes a and b only on the ancilla=1 slice; the slice drops
    # anc_axis, so later axes shift down by one.
    out = t.copy()
    sl = _anc1(t.ndim, anc_axis)
    a2, b2 = (x - 1 if x > anc_axis else x for x in (a, b))
    out[sl] = np.swapaxes(t[sl], a2, b2)
    return out


def _simulate_vector(circuit: CircuitIR, kets: list[np.ndarray]) -> float:
    state = np.array([1.0, 0.0], dtype=np.complex128)
    for k in kets:
        state = np.multiply.outer(state, k)
    for g in circuit.gates:
        if isinstance(g, Hadamard):
            state = _apply_matrix(state, _H, 0)
        elif isinstance(g, Phase):
            state = state.copy()
            state[1] *= 1j**g.s
        elif isinstance(g, ControlledSwap):
            state = _swap_where_ancilla_set(state, 0, g.wire_a, g.wire_b)
        else:
            state = _apply_matrix(state, g.matrix, g.wire)
    return float(np.sum(np.abs(state[0]) ** 2))


def _simulate_density(circuit: CircuitIR, ops: list[np.ndarray]) -> float:
    n = len(circuit.wires)
    t = np.array([1.0, 0.0], dtype=np.complex128)
    t = np.multiply.outer(t, np.array([1.0, 0.0], dtype=np.complex128))  # (r0, c0)
    for op in ops:
        t = np.multiply.outer(t, op)  # appends (r_k, c_k)
    # current axis order r0 c0 r1 c1 ...; reorder to r0..r_{n-1} c0..c_{n-1}
    order = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    t = np.transpose(t, order)
    for g in circuit.gates:
        if isinstance(g, Hadamard):
            t = _apply_matrix(_apply_matrix(t, _H, 0), _H.conj(), n)
        elif isinstance(g, Phase):
            ph = 1j**g.s
            t = t.copy()
            t[_anc1(t.ndim, 0)] *= ph
            t[_anc1(t.ndim, n)] *= np.conj(ph)
        elif isinstance(g, ControlledSwap):
            t = _swap_where_ancilla_set(t, 0, g.wire_a, g.wire_b)
            t = _swap_where_ancilla_set(t, n, n + g.wire_a, n + g.wire_b)
        else:
            t = _apply_matrix(t, g.matrix, g.wire)
            t = _apply_matrix(t, g.matrix.conj(), n + g.wire)
    block = t[(0,) + (slice(None),) * (n - 1) + (0,) + (slice(None),) * (n - 1)]
    size = int(np.prod(circuit.system_dims))
    return float(np.trace(block.reshape(size, size)).real)


def simulate_exact(circuit: CircuitIR, inputs: Sequence) -> tuple[float, float]:
    """Exact ancilla outcome probabilities ``(p0, p1)``.

    All-pure inputs are simulated as a state vector of shape
    ``(2, d_1, ..., d_n)``; any mixed input switches to a density tensor.
    Controlled-SWAPs permute tensor axes on the ancilla-one slice, so no
    dense gate matrix is ever formed.
    """
    inputs = states_from(inputs)
    dims = circuit.system_dims
    if len(inputs) != len(dims):
        raise DimensionMismatchError(f"circuit has {len(dims)} system wires, got {len(inputs)} inputs")
    for k, (s, d) in enumerate(zip(inputs, dims)):
        if s.dim != d:
            raise DimensionMismatchError(f"input {k} has dim {s.dim}, wire expects {d}")
    if all(isinstance(s, PureState) for s in inputs):
        p0 = _simulate_vector(circuit, [s.amplitudes for s in inputs])
    else:
        p0 = _simulate_density(circuit, [as_operator(s) for s in inputs])
    p0 = min(1.0, max(0.0, p0))
    return p0, 1.0 - p0


def implied_invariant(p0_real: float, p0_imag: float) -> complex:
    """Invert ``p0 = (1 + Re[i**s Delta]) / 2`` from the s=0 and s=1 runs."""
    return complex(2.0 * p0_real - 1.0, 1.0 - 2.0 * p0_imag)


def circuit_invariant(states: Sequence) -> complex:
    """Exact-backend value of ``Delta_n`` for the given inputs."""
    states = states_from(states)
    n, dim = len(states), states[0].dim
    p_re = simulate_exact(build_cycle_test(n, dim, 0), states)[0]
    p_im = simulate_exact(build_cycle_test(n, dim, 1), states)[0]
    return implied_invariant(p_re, p_im)


# --------------------------------------------------------------------------
# shots
# --------------------------------------------------------------------------


def _seed_tag(seed):
    return seed if isinstance(seed, (int, np.integer)) else None


def sample_counts(p0: float, shots: int, seed: SeedLike, s: int = 0) -> ShotRecord:
    """Binomial ancilla counts for a known ``p0``."""
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    c0 = int(make_rng(seed).binomial(shots, p0))
    return ShotRecord(shots, c0, shots - c0, s, _seed_tag(seed))


def sample_shots(circuit: CircuitIR, inputs: Sequence, shots: int, seed: SeedLike) -> ShotRecord:
    """Draw ``count0 ~ Binomial(shots, p0)`` with ``p0`` from the exact backend."""
    p0, _ = simulate_exact(circuit, inputs)
    return sample_counts(p0, shots, seed, circuit.s)


def estimate_from_probabilities(p0_real: float, p0_imag: float, shots: int, seed: SeedLike) -> complex:
    """Shot estimate of ``Delta`` from exact ``p0`` of the s=0 and s=1 runs.

    The two parts use independent child streams of ``seed``.
    """
    r_re, r_im = spawn_rngs(seed, 2)
    c_re = sample_counts(p0_real, shots, r_re).frequency0
    c_im = sample_counts(p0_imag, shots, r_im).frequency0
    return implied_invariant(c_re, c_im)


def estimate_invariant(states: Sequence, shots_per_part: int, seed: SeedLike, trials: int | None = None):
    """Estimate ``Delta_n`` with ``shots_per_part`` shots for each of Re and Im.

    Invariants of order one or two are real, so their s=1 run is skipped and
    the imaginary part is reported as exactly zero. With ``trials`` an array
    of independent estimates is returned from a single exact simulation.
    """
    if shots_per_part < 1:
        raise ValidationError("shots must be >= 1")
    states = states_from(states)
    n, dim = len(states), states[0].dim
    r_re, r_im = spawn_rngs(seed, 2)
    size = 1 if trials is None else int(trials)
    p_re = simulate_exact(build_cycle_test(n, dim, 0), states)[0]
    est = 2.0 * r_re.binomial(shots_per_part, p_re, size=size) / shots_per_part - 1.0 + 0j
    if n > 2:
        p_im = simulate_exact(build_cycle_test(n, dim, 1), states)[0]
        est += 1j * (1.0 - 2.0 * r_im.binomial(shots_per_part, p_im, size=size) / shots_per_part)
    return complex(est[0]) if trials is None else est


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------


def _gate_to_json(g) -> dict:
    if isinstance(g, Hadamard):
        return {"kind": "h", "wire": g.wire}
    if isinstance(g, Phase):
        return {"kind": "phase", "s": g.s, "wire": g.wire}
    if isinstance(g, ControlledSwap):
        return {"kind": "cswap", "control": g.control, "a": g.wire_a, "b": g.wire_b}
    return {
        "kind": "unitary",
        "wire": g.wire,
        "re": g.matrix.real.tolist(),
        "im": g.matrix.imag.tolist(),
    }


def _gate_from_json(d: dict):
    kind = d.get("kind")
    try:
        if kind == "h":
            return Hadamard(int(d["wire"]))
        if kind == "phase":
            return Phase(int(d["s"]), int(d["wire"]))
        if kind == "cswap":
            return ControlledSwap(int(d["control"]), int(d["a"]), int(d["b"]))
        if kind == "unitary":
            m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
            return ApplyUnitary(int(d["wire"]), m)
    except KeyError as exc:
        raise ValidationError(f"gate {kind!r} missing field {exc}") from None
    raise ValidationError(f"unknown gate kind {kind!r}")


def circuit_to_dict(circuit: CircuitIR) -> dict:
    return {
        "wires": [{"label": w.label, "dim": w.dim} for w in circuit.wires],
        "gates": [_gate_to_json(g) for g in circuit.gates],
        "measure": circuit.measure,
    }


def parse_circuit_json(text: str) -> CircuitIR:
    """Inverse of ``export_circuit(..., "json-ir")``."""
    try:
        d = json.loads(text)
        wires = tuple(Wire(str(w["label"]), int(w["dim"])) for w in d["wires"])
        gates = tuple(_gate_from_json(g) for g in d["gates"])
        measure = d.get("measure", "ancilla-z")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"malformed json-ir: {exc}") from None
    return CircuitIR(wires, gates, measure)


def _u3_angles(m: np.ndarray) -> tuple[float, float, float]:
    """ZYZ angles of a qubit unitary up to global phase: ``U ~ Rz(phi) Ry(theta) Rz(lam)``."""
    m = m / np.sqrt(np.linalg.det(m))
    theta = 2.0 * np.arctan2(abs(m[1, 0]), abs(m[0, 0]))
    s = np.angle(m[1, 1]) if abs(m[1, 1]) > 1e-12 else 0.0
    d = np.angle(m[1, 0]) if abs(m[1, 0]) > 1e-12 else 0.0
    # m[1,1] = e^{i(phi+lam)/2} cos, m[1,0] = e^{i(phi-lam)/2} sin
    return float(theta), float(s + d), float(s - d)


def export_circuit(circuit: CircuitIR, fmt: str = "json-ir") -> str:
    """Serialize a circuit as ``json-ir`` or the line-oriented ``qasm-like`` text.

    ``json-ir`` is canonical (sorted keys), so export-parse-export is
    byte-identical. ``qasm-like`` needs qubit system wires.
    """
    if fmt == "json-ir":
        return json.dumps(circuit_to_dict(circuit), sort_keys=True, indent=1) + "\n"
    if fmt != "qasm-like":
        raise UnsupportedFormatError(f"unknown export format {fmt!r}")
    if any(d != 2 for d in circuit.system_dims):
        raise UnsupportedFormatError("qasm-like export needs all system wires of dim 2")
    names = [w.label for w in circuit.wires]
    lines = []
    for g in circuit.gates:
        if isinstance(g, Hadamard):
            lines.append(f"h {names[g.wire]};")
        elif isinstance(g, Phase):
            lines.append(f"s {names[g.wire]};")
        elif isinstance(g, ControlledSwap):
            lines.append(f"cswap {names[g.control]}, {names[g.wire_a]}, {names[g.wire_b]};")
        else:
            th, ph, lam = _u3_angles(g.matrix)
            lines.append(f"u3({th:.17g}, {ph:.17g}, {lam:.17g}) {names[g.wire]};")
    lines.append(f"measure {names[ANCILLA]};")
    return "\n".join(lines) + "\n"
