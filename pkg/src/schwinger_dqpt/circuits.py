"""Circuit IR, the state-prep and Trotter-step builders, scheduling and QASM I/O.

A Circuit is an ordered list of nodes: GateOp (a Gate on explicit target
qubits), Barrier (a scheduling fence) and Checkpoint (a time label used
by the noisy executors to record the state). Builders return circuits
that should be treated as frozen; executions never mutate them, so
circuits are safe to share across parallel workers.

Gate set is fixed to {h, x, ry, rz, cx}: everything the prep and Trotter
constructions need, nothing more. There is no transpilation; layout
problems are reported by validate_layout, never rewritten.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .qcore import CNOT, Gate, H, StateVector, X, embed_operator, ry, rz
from .schwinger import ModelParams, diagonalize

__all__ = [
    "GateOp",
    "Barrier",
    "Checkpoint",
    "Circuit",
    "MomentSchedule",
    "CouplingMap",
    "LayoutReport",
    "QasmError",
    "build_ground_prep",
    "build_trotter_step",
    "build_quench_program",
    "run_statevector",
    "circuit_unitary",
    "moments",
    "validate_layout",
    "export_qasm",
    "parse_qasm",
]


class QasmError(ValueError):
    """Raised on unsupported gates at export or malformed text at parse."""


@dataclass(frozen=True)
class GateOp:
    gate: Gate
    targets: tuple

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        if len(self.targets) != self.gate.arity:
            raise ValueError(f"gate {self.gate.name!r} needs {self.gate.arity} targets, got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"targets must be distinct, got {self.targets}")


@dataclass(frozen=True)
class Barrier:
    """Scheduling fence: figure_faithful moments never straddle one."""


@dataclass(frozen=True)
class Checkpoint:
    """Marks 'the state at time t lives here' for trajectory recorders."""

    time: float


class Circuit:
    """Ordered gate program on ``n_qubits`` qubits with optional metadata.

    ``params`` is a free-form record (m, J, dt, steps, ...) that survives
    into trajectories so a fitting sweep can rebuild the same program.
    """

    __slots__ = ("n_qubits", "name", "params", "_ops")

    def __init__(self, n_qubits: int, name: str = "", params: dict | None = None):
        if not 1 <= int(n_qubits) <= 8:
            raise ValueError(f"n_qubits must be in 1..8, got {n_qubits}")
        self.n_qubits = int(n_qubits)
        self.name = name
        self.params = dict(params or {})
        self._ops: list = []

    # -- construction ------------------------------------------------------

    def append(self, op) -> "Circuit":
        if isinstance(op, GateOp):
            if any(not 0 <= q < self.n_qubits for q in op.targets):
                raise ValueError(f"targets {op.targets} out of range for {self.n_qubits} qubits")
        elif not isinstance(op, (Barrier, Checkpoint)):
            raise TypeError(f"expected GateOp, Barrier or Checkpoint, got {type(op).__name__}")
        self._ops.append(op)
        return self

    def gate(self, gate: Gate, *targets: int) -> "Circuit":
        return self.append(GateOp(gate, targets))

    def h(self, q: int) -> "Circuit":
        return self.gate(H, q)

    def x(self, q: int) -> "Circuit":
        return self.gate(X, q)

    def ry(self, q: int, theta: float) -> "Circuit":
        return self.gate(ry(theta), q)

    def rz(self, q: int, alpha: float) -> "Circuit":
        return self.gate(rz(alpha), q)

    def cx(self, control: int, target: int) -> "Circuit":
        return self.gate(CNOT, control, target)

    def barrier(self) -> "Circuit":
        return self.append(Barrier())

    def checkpoint(self, time: float) -> "Circuit":
        return self.append(Checkpoint(float(time)))

    def extend(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot extend with a circuit of different width")
        self._ops.extend(other._ops)
        return self

    def __add__(self, other: "Circuit") -> "Circuit":
        out = Circuit(self.n_qubits, self.name, self.params)
        out._ops = list(self._ops)
        return out.extend(other)

    def repeat(self, n: int) -> "Circuit":
        if n < 1:
            raise ValueError("repeat count must be >= 1")
        out = Circuit(self.n_qubits, self.name, self.params)
        out._ops = list(self._ops) * n
        return out

    # -- inspection --------------------------------------------------------

    @property
    def ops(self) -> tuple:
        return tuple(self._ops)

    @property
    def gate_ops(self) -> tuple:
        return tuple(op for op in self._ops if isinstance(op, GateOp))

    @property
    def checkpoints(self) -> tuple:
        return tuple(op for op in self._ops if isinstance(op, Checkpoint))

    @property
    def n_gates(self) -> int:
        return len(self.gate_ops)

    def gate_counts(self) -> dict:
        counts: dict = {}
        for op in self.gate_ops:
            counts[op.gate.name] = counts.get(op.gate.name, 0) + 1
        return counts

    def __len__(self):
        return len(self._ops)

    def __iter__(self):
        return iter(self._ops)

    def __repr__(self):
        return f"Circuit({self.name or 'unnamed'}, n_qubits={self.n_qubits}, n_gates={self.n_gates})"


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_ground_prep(p: ModelParams) -> Circuit:
    """Ground-state preparation on 4 qubits from |0000>.

    H on q0 opens the field-sign superposition; a Y-rotation on q1 with
    angle 2 atan2(sqrt(2) b_g, sqrt(2) a_g) sets the vacuum/meson weights
    (real amplitudes, so one rotation suffices); X2 plus the CNOT cascade
    (0,2), (1,3), (0,3), (3,2) then entangles the pattern into
    a_g(|0010> + |1011>) + b_g(|0101> + |1100>). Angle is -pi/4 at m = J.
    """
    spec = diagonalize(p)
    theta = 2.0 * math.atan2(math.sqrt(2.0) * spec.b_g, math.sqrt(2.0) * spec.a_g)
    c = Circuit(4, "ground_prep", {"m": p.m, "J": p.J, "quench_sign": p.quench_sign})
    c.h(0)
    c.ry(1, theta)
    c.x(2)
    c.cx(0, 2)
    c.cx(1, 3)
    c.cx(0, 3)
    c.cx(3, 2)
    return c


def _hopping_block(c: Circuit, link: int, m1: int, m2: int, J: float, dt: float) -> None:
    """One Cartan block K^dag A K = exp(-i h_J dt) for the hopping term
    (J/4) X_link (X_m1 X_m2 + Y_m1 Y_m2); exact including global phase.
    """
    # K (rightmost factor first): CNOT(m1,m2), H(link), H(m1), CNOT(link,m1), CNOT(m1,m2)
    c.cx(m1, m2)
    c.h(link)
    c.h(m1)
    c.cx(link, m1)
    c.cx(m1, m2)
    # A: the commuting Z rotations
    c.rz(m1, J * dt / 2.0)
    c.rz(m2, -J * dt / 2.0)
    # K^dag
    c.cx(m1, m2)
    c.cx(link, m1)
    c.h(m1)
    c.h(link)
    c.cx(m1, m2)


def build_trotter_step(p: ModelParams, dt: float) -> Circuit:
    """One first-order Trotter step exp(-i H dt) ~ hop(q0q1q2) hop(q1q2q3) mass.

    The second hopping block mirrors the first with the link on q3 and
    the matter roles swapped, (link, m1, m2) = (3, 2, 1), which keeps
    every CNOT on nearest-neighbour pairs of the linear 0-1-2-3 layout.
    Mass rotations are Rz(-+ m dt quench_sign) on q1, q2. Barriers fence
    the two blocks and the two mass rotations (sequential mass moments),
    giving the figure_faithful schedule depth 20.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    m, J = p.signed_mass, p.J
    c = Circuit(4, "trotter_step", {"m": p.m, "J": p.J, "dt": dt, "quench_sign": p.quench_sign})
    _hopping_block(c, 0, 1, 2, J, dt)
    c.barrier()
    _hopping_block(c, 3, 2, 1, J, dt)
    c.barrier()
    c.rz(1, -m * dt)
    c.barrier()
    c.rz(2, m * dt)
    c.barrier()
    return c


def build_quench_program(p: ModelParams, dt: float, steps: int) -> Circuit:
    """Ground prep of H(m) followed by ``steps`` Trotter steps of H(-m).

    Checkpoints label t = 0 (right after preparation) and t = k dt after
    each step, which is where the trajectory recorders sample the state.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    c = Circuit(4, "quench_program",
                {"m": p.m, "J": p.J, "dt": dt, "steps": steps, "quench_sign": p.quench_sign})
    c.extend(build_ground_prep(p))
    c.barrier()
    c.checkpoint(0.0)
    step = build_trotter_step(p.quenched(), dt)
    for k in range(1, steps + 1):
        c.extend(step)
        c.checkpoint(k * dt)
    return c


# ---------------------------------------------------------------------------
# execution and scheduling
# ---------------------------------------------------------------------------

def run_statevector(c: Circuit, input: StateVector | None = None) -> StateVector:
    """Noiseless execution: sequential gate application, barriers ignored."""
    if input is None:
        input = StateVector.basis(0, c.n_qubits)
    if input.n_qubits != c.n_qubits:
        raise ValueError(f"input has {input.n_qubits} qubits, circuit {c.n_qubits}")
    amps = np.array(input.amps)
    cache: dict = {}
    for op in c.gate_ops:
        key = (op.gate, op.targets)
        u = cache.get(key)
        if u is None:
            u = cache[key] = embed_operator(op.gate.matrix, op.targets, c.n_qubits)
        amps = u @ amps
    return StateVector(amps)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Compose the full 2^n x 2^n unitary of the circuit."""
    u = np.eye(2**c.n_qubits, dtype=complex)
    for op in c.gate_ops:
        u = embed_operator(op.gate.matrix, op.targets, c.n_qubits) @ u
    return u


@dataclass(frozen=True)
class MomentSchedule:
    """Moments as tuples of indices into ``circuit.gate_ops``; depth = count."""

    moments: tuple
    mode: str

    @property
    def depth(self) -> int:
        return len(self.moments)


def moments(c: Circuit, mode: str = "greedy") -> MomentSchedule:
    """Schedule gates into moments of disjoint-qubit operations.

    greedy packs each gate into the earliest moment whose qubits are all
    free, ignoring barriers; figure_faithful does the same but never
    schedules across a Barrier, reproducing the published depth of 20
    per Trotter step (two hopping blocks of depth 9 plus two sequential
    mass rotations). greedy depth <= figure_faithful depth always.
    """
    if mode not in ("greedy", "figure_faithful"):
        raise ValueError(f"mode must be 'greedy' or 'figure_faithful', got {mode!r}")
    frontier = [0] * c.n_qubits
    placed: list = []
    index = 0
    for op in c.ops:
        if isinstance(op, Barrier):
            if mode == "figure_faithful" and frontier:
                top = max(frontier)
                frontier = [top] * c.n_qubits
            continue
        if isinstance(op, Checkpoint):
            continue
        slot = max(frontier[q] for q in op.targets)
        while len(placed) <= slot:
            placed.append([])
        placed[slot].append(index)
        for q in op.targets:
            frontier[q] = slot + 1
        index += 1
    return MomentSchedule(tuple(tuple(m) for m in placed), mode)


@dataclass(frozen=True)
class CouplingMap:
    """Undirected hardware connectivity over qubit indices."""

    n_qubits: int
    edges: tuple

    def __post_init__(self):
        norm = []
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-edge on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ValueError(f"edge ({a}, {b}) out of range")
            norm.append((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(norm))

    @classmethod
    def linear(cls, n_qubits: int) -> "CouplingMap":
        return cls(n_qubits, tuple((q, q + 1) for q in range(n_qubits - 1)))

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges


@dataclass(frozen=True)
class LayoutReport:
    ok: bool
    violations: tuple  # (gate index, GateOp) pairs


def validate_layout(c: Circuit, cmap: CouplingMap) -> LayoutReport:
    """Report two-qubit gates whose target pair is not a coupling edge."""
    bad = []
    for i, op in enumerate(c.gate_ops):
        if len(op.targets) == 2 and not cmap.has_edge(*op.targets):
            bad.append((i, op))
    return LayoutReport(not bad, tuple(bad))


# ---------------------------------------------------------------------------
# OpenQASM 2.0 subset I/O
# ---------------------------------------------------------------------------

_QASM_HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def export_qasm(c: Circuit) -> str:
    """Serialize to an OpenQASM 2.0 subset with gates {h, x, ry, rz, cx}.

    Barriers become ``barrier q;`` lines and checkpoints become
    ``// checkpoint t=...`` comments, both recovered by parse_qasm.
    Angles use repr floats, which round-trip exactly.
    """
    lines = [_QASM_HEADER + f"qreg q[{c.n_qubits}];"]
    for op in c.ops:
        if isinstance(op, Barrier):
            lines.append("barrier q;")
        elif isinstance(op, Checkpoint):
            lines.append(f"// checkpoint t={op.time!r}")
        elif op.gate.name in ("h", "x"):
            lines.append(f"{op.gate.name} q[{op.targets[0]}];")
        elif op.gate.name in ("ry", "rz"):
            lines.append(f"{op.gate.name}({op.gate.params[0]!r}) q[{op.targets[0]}];")
        elif op.gate.name == "cx":
            lines.append(f"cx q[{op.targets[0]}],q[{op.targets[1]}];")
        else:
            raise QasmError(f"gate {op.gate.name!r} is outside the exportable set")
    return "\n".join(lines) + "\n"


_RE_QREG = re.compile(r"qreg\s+q\[(\d+)\]\s*;")
_RE_ONE = re.compile(r"(h|x)\s+q\[(\d+)\]\s*;")
_RE_ROT = re.compile(r"(ry|rz)\(([^)]+)\)\s+q\[(\d+)\]\s*;")
_RE_CX = re.compile(r"cx\s+q\[(\d+)\]\s*,\s*q\[(\d+)\]\s*;")
_RE_CHECK = re.compile(r"//\s*checkpoint\s+t=(\S+)")


def parse_qasm(text: str) -> Circuit:
    """Parse the subset emitted by export_qasm back into a Circuit."""
    c: Circuit | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        mark = _RE_CHECK.match(line)
        if mark:
            if c is None:
                raise QasmError("checkpoint before qreg declaration")
            c.checkpoint(float(mark.group(1)))
            continue
        if line.startswith("//"):
            continue
        if line.startswith("OPENQASM") or line.startswith("include"):
            continue
        m = _RE_QREG.fullmatch(line)
        if m:
            if c is not None:
                raise QasmError("multiple qreg declarations")
            c = Circuit(int(m.group(1)), "parsed")
            continue
        if c is None:
            raise QasmError(f"statement before qreg declaration: {line!r}")
        if line.startswith("barrier"):
            c.barrier()
            continue
        m = _RE_ONE.fullmatch(line)
        if m:
            c.gate(H if m.group(1) == "h" else X, int(m.group(2)))
            continue
        m = _RE_ROT.fullmatch(line)
        if m:
            angle = float(m.group(2))
            c.gate(ry(angle) if m.group(1) == "ry" else rz(angle), int(m.group(3)))
            continue
        m = _RE_CX.fullmatch(line)
        if m:
            c.cx(int(m.group(1)), int(m.group(2)))
            continue
        raise QasmError(f"unrecognized statement: {line!r}")
    if c is None:
        raise QasmError("no qreg declaration found")
    return c
