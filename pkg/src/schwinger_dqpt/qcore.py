"""Dense n-qubit states, gates, Kraus channels and state functionals.

Conventions used throughout the package:

* Qubit 0 is the leftmost label in ket notation and the most significant
  bit of the basis-state index, so ``|1011>`` is index 11.
* Everything is dense ``complex128``; the intended regime is n <= 8
  (dimension <= 256), where dense linear algebra beats anything clever.
* Values are immutable after construction (arrays are copied and marked
  read-only) and therefore safe to share across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "StateVector",
    "DensityMatrix",
    "Gate",
    "KrausChannel",
    "PauliString",
    "H",
    "X",
    "Y",
    "Z",
    "CNOT",
    "ry",
    "rz",
    "apply_gate",
    "apply_channel",
    "trace_distance",
    "fidelity",
    "pauli_expectation",
    "embed_operator",
]

MAX_QUBITS = 8

NORM_ATOL = 1e-10       # state-vector norm drift
HERM_ATOL = 1e-10       # density-matrix hermiticity / trace drift
PSD_SLACK = -1e-9       # eigenvalue floor, tolerates long channel chains
UNITARY_ATOL = 1e-12
KRAUS_ATOL = 1e-12      # completeness sum K^dag K = 1

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _frozen(a: np.ndarray, dtype=complex) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


def _n_qubits_of(dim: int, what: str) -> int:
    n = int(dim).bit_length() - 1
    if dim != 2**n or not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"{what} dimension {dim} is not 2^n with 1 <= n <= {MAX_QUBITS}")
    return n


class StateVector:
    """Pure state of ``n_qubits`` qubits: 2^n complex amplitudes, unit norm."""

    __slots__ = ("amps", "n_qubits")

    def __init__(self, amps):
        amps = _frozen(np.asarray(amps).reshape(-1))
        self.n_qubits = _n_qubits_of(amps.size, "state vector")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state vector norm {norm!r} deviates from 1 beyond {NORM_ATOL}")
        self.amps = amps

    @classmethod
    def basis(cls, label: str | int, n_qubits: int | None = None) -> "StateVector":
        """Computational basis state from a bit string like ``"1011"`` or an index."""
        if isinstance(label, str):
            n_qubits = len(label)
            index = int(label, 2)
        else:
            if n_qubits is None:
                raise ValueError("basis index needs an explicit n_qubits")
            index = int(label)
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amps, self.amps.conj()))

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amps, other.amps))

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


class DensityMatrix:
    """Mixed state: Hermitian, unit-trace, positive semidefinite 2^n x 2^n matrix."""

    __slots__ = ("matrix", "n_qubits")

    def __init__(self, matrix):
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {matrix.shape}")
        self.n_qubits = _n_qubits_of(matrix.shape[0], "density matrix")
        if np.abs(matrix - matrix.conj().T).max() > HERM_ATOL:
            raise ValueError("density matrix is not Hermitian within tolerance")
        tr = np.trace(matrix).real
        if abs(tr - 1.0) > HERM_ATOL:
            raise ValueError(f"density matrix trace {tr!r} deviates from 1")
        if np.linalg.eigvalsh(matrix).min() < PSD_SLACK:
            raise ValueError(f"density matrix has an eigenvalue below {PSD_SLACK}")
        self.matrix = _frozen(matrix)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2**n_qubits
        return cls(np.eye(dim, dtype=complex) / dim)

    def populations(self) -> np.ndarray:
        """Diagonal in the computational basis (real, sums to 1)."""
        return np.real(np.diag(self.matrix))

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits})"


class Gate:
    """Named unitary on ``arity`` qubits.

    Parameters
    ----------
    name : str
        Lower-case identifier (``"h"``, ``"ry"``, ...); used by the
        circuit text exporter.
    matrix : array_like
        Unitary of shape (2^arity, 2^arity); checked to ``UNITARY_ATOL``.
    params : tuple of float, optional
        Rotation angles, kept for export and equality.
    """

    __slots__ = ("name", "matrix", "params", "arity")

    def __init__(self, name: str, matrix, params: tuple = ()):
        matrix = np.asarray(matrix, dtype=complex)
        arity = _n_qubits_of(matrix.shape[0], f"gate {name!r}")
        dev = np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])).max()
        if dev > UNITARY_ATOL:
            raise ValueError(f"gate {name!r} is not unitary (deviation {dev:.2e})")
        self.name = name
        self.matrix = _frozen(matrix)
        self.params = tuple(float(p) for p in params)
        self.arity = arity

    def __eq__(self, other):
        return (
            isinstance(other, Gate)
            and self.name == other.name
            and self.params == other.params
            and self.arity == other.arity
        )

    def __hash__(self):
        return hash((self.name, self.params, self.arity))

    def __repr__(self):
        args = f"({', '.join(repr(p) for p in self.params)})" if self.params else ""
        return f"Gate({self.name}{args})"


H = Gate("h", np.array([[1, 1], [1, -1]]) / np.sqrt(2))
X = Gate("x", _PAULI["X"])
Y = Gate("y", _PAULI["Y"])
Z = Gate("z", _PAULI["Z"])
CNOT = Gate("cx", np.array([
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 1, 0],
]))


def ry(theta: float) -> Gate:
    """Y-axis rotation exp(-i Y theta / 2)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return Gate("ry", np.array([[c, -s], [s, c]]), (theta,))


def rz(alpha: float) -> Gate:
    """Z-axis rotation exp(-i Z alpha / 2)."""
    phase = np.exp(-1j * alpha / 2)
    return Gate("rz", np.diag([phase, phase.conj()]), (alpha,))


class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators.

    The completeness sum ``sum_k K_k^dag K_k = 1`` is enforced to
    ``KRAUS_ATOL``; all operators must share one square shape.
    """

    __slots__ = ("operators", "arity")

    def __init__(self, operators):
        ops = [np.asarray(k, dtype=complex) for k in operators]
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators must share one shape")
        self.arity = _n_qubits_of(shape[0], "Kraus channel")
        total = sum(k.conj().T @ k for k in ops)
        dev = np.abs(total - np.eye(shape[0])).max()
        if dev > KRAUS_ATOL:
            raise ValueError(f"Kraus completeness sum deviates from identity by {dev:.2e}")
        self.operators = tuple(_frozen(k) for k in ops)

    def __len__(self):
        return len(self.operators)

    def __repr__(self):
        return f"KrausChannel(arity={self.arity}, n_ops={len(self.operators)})"


class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("XZYI")``."""

    __slots__ = ("letters",)

    def __init__(self, letters: str):
        letters = letters.upper()
        if not letters or any(ch not in "IXYZ" for ch in letters):
            raise ValueError(f"Pauli string must use letters IXYZ, got {letters!r}")
        if len(letters) > MAX_QUBITS:
            raise ValueError(f"Pauli string longer than {MAX_QUBITS} qubits")
        self.letters = letters

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def matrix(self) -> np.ndarray:
        return _pauli_matrix(self.letters)

    def __eq__(self, other):
        return isinstance(other, PauliString) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __repr__(self):
        return f"PauliString({self.letters!r})"


@lru_cache(maxsize=4096)
def _pauli_matrix(letters: str) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for ch in letters:
        out = np.kron(out, _PAULI[ch])
    return _frozen(out)


def _check_targets(targets, arity: int, n_qubits: int) -> tuple:
    targets = tuple(int(q) for q in targets)
    if len(targets) != arity:
        raise ValueError(f"expected {arity} target(s), got {targets}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets must be distinct, got {targets}")
    if any(not 0 <= q < n_qubits for q in targets):
        raise ValueError(f"targets {targets} out of range for {n_qubits} qubits")
    return targets


def embed_operator(op: np.ndarray, targets, n_qubits: int) -> np.ndarray:
    """Embed a k-qubit operator into the full 2^n space on the given qubits.

    ``targets[i]`` receives tensor factor i of ``op``; remaining qubits get
    the identity. Qubit 0 is the most significant index bit.
    """
    op = np.asarray(op, dtype=complex)
    k = _n_qubits_of(op.shape[0], "operator")
    targets = _check_targets(targets, k, n_qubits)
    rest = [q for q in range(n_qubits) if q not in targets]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    # Current tensor axis order is (targets..., rest...) on both sides;
    # permute back to qubit order 0..n-1.
    order = list(targets) + rest
    perm = np.argsort(order)
    tens = full.reshape([2] * (2 * n_qubits))
    tens = tens.transpose(list(perm) + [p + n_qubits for p in perm])
    return np.ascontiguousarray(tens.reshape(2**n_qubits, 2**n_qubits))


def apply_gate(state, gate: Gate, targets):
    """Apply a gate to the target qubits of a StateVector or DensityMatrix."""
    if isinstance(state, StateVector):
        u = embed_operator(gate.matrix, targets, state.n_qubits)
        return StateVector(u @ state.amps)
    if isinstance(state, DensityMatrix):
        u = embed_operator(gate.matrix, targets, state.n_qubits)
        return DensityMatrix(u @ state.matrix @ u.conj().T)
    raise TypeError(f"expected StateVector or DensityMatrix, got {type(state).__name__}")


def apply_channel(rho: DensityMatrix, channel: KrausChannel, targets) -> DensityMatrix:
    """Apply a Kraus channel to the target qubits: rho -> sum_k K rho K^dag."""
    if not isinstance(rho, DensityMatrix):
        raise TypeError("apply_channel acts on density matrices only")
    ks = [embed_operator(k, targets, rho.n_qubits) for k in channel.operators]
    out = np.zeros_like(np.asarray(rho.matrix))
    for k in ks:
        out += k @ rho.matrix @ k.conj().T
    return DensityMatrix(out)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """T(a, b) = (1/2) ||a - b||_1 via eigenvalues of the Hermitian difference."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("trace distance needs states of equal dimension")
    eigs = np.linalg.eigvalsh(a.matrix - b.matrix)
    return 0.5 * float(np.abs(eigs).sum())


def fidelity(psi: StateVector, rho: DensityMatrix) -> float:
    """Pure-mixed fidelity <psi| rho |psi>, clipped into [0, 1]."""
    if psi.n_qubits != rho.n_qubits:
        raise ValueError("fidelity needs states of equal dimension")
    val = np.real(psi.amps.conj() @ rho.matrix @ psi.amps)
    return float(np.clip(val, 0.0, 1.0))


def pauli_expectation(state, pauli: PauliString) -> float:
    """<P> for a StateVector or DensityMatrix; real and in [-1, 1]."""
    if isinstance(state, StateVector):
        if pauli.n_qubits != state.n_qubits:
            raise ValueError("Pauli string length must match qubit count")
        val = np.real(np.vdot(state.amps, pauli.matrix() @ state.amps))
    elif isinstance(state, DensityMatrix):
        if pauli.n_qubits != state.n_qubits:
            raise ValueError("Pauli string length must match qubit count")
        val = np.real(np.trace(pauli.matrix() @ state.matrix))
    else:
        raise TypeError(f"expected StateVector or DensityMatrix, got {type(state).__name__}")
    return float(np.clip(val, -1.0, 1.0))
