"""Kraus noise models, noisy executors, shot sampling and Pauli tomography.

Noise is attached per gate: after every gate the matching flip channel
acts on exactly the gate's qubits (single-qubit triple for 1q gates, the
16-operator tensor channel for 2q gates). Exact channel evolution on the
density matrix is the deterministic default; sample_trajectories redoes
the same physics as averaged unitary quantum trajectories for seeded
Monte-Carlo studies. Readout is noiseless rotation into the measurement
basis followed by independent classical bit flips, the only error source
assigned to measurement.

Three preset probability assignments are supported:

* abc_shared  - 1q and 2q gates share one (p_x, p_y, p_z) triple;
* split_xyz   - isotropic triples (p1, p1, p1) for 1q and (p2, p2, p2) for 2q;
* split_xz    - X and Z flips equal within each arity, Y off:
                (p1, 0, p1) and (p2, 0, p2).

split_xyz with the Y component forced to zero coincides with split_xz,
which is used as a cross-check between presets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuits import Barrier, Checkpoint, Circuit, GateOp
from .qcore import (
    DensityMatrix,
    KrausChannel,
    PauliString,
    StateVector,
    _PAULI,
    embed_operator,
)

__all__ = [
    "NoiseModelSpec",
    "Trajectory",
    "TomographySetting",
    "CountsTable",
    "make_flip_channel",
    "make_two_qubit_channel",
    "build_noise_model",
    "run_density_matrix",
    "sample_trajectories",
    "tomography_settings",
    "simulate_readout",
    "exact_readout",
    "reconstruct_state",
    "DEFAULT_SHOTS",
]

DEFAULT_SHOTS = 8192


def _validate_triple(triple, what: str) -> tuple:
    triple = tuple(float(p) for p in triple)
    if len(triple) != 3:
        raise ValueError(f"{what} must be a (p_x, p_y, p_z) triple, got {triple}")
    if any(p < 0 for p in triple):
        raise ValueError(f"{what} has a negative probability: {triple}")
    if sum(triple) > 1.0 + 1e-12:
        raise ValueError(f"{what} probabilities sum to {sum(triple)} > 1")
    return triple


@dataclass(frozen=True)
class NoiseModelSpec:
    """Flip probabilities per gate arity plus the readout flip probability.

    ``readout_flip`` None means "use the single-qubit p_x", mirroring how
    measurement errors are tied to the bit-flip contribution.
    """

    single_qubit: tuple = (0.0, 0.0, 0.0)
    two_qubit: tuple = (0.0, 0.0, 0.0)
    readout_flip: float | None = None
    preset: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "single_qubit", _validate_triple(self.single_qubit, "single_qubit"))
        object.__setattr__(self, "two_qubit", _validate_triple(self.two_qubit, "two_qubit"))
        if self.readout_flip is not None and not 0.0 <= self.readout_flip <= 1.0:
            raise ValueError(f"readout_flip must be in [0, 1], got {self.readout_flip}")

    @property
    def readout_probability(self) -> float:
        return self.single_qubit[0] if self.readout_flip is None else self.readout_flip

    @property
    def is_noiseless(self) -> bool:
        return sum(self.single_qubit) == 0.0 and sum(self.two_qubit) == 0.0

    @classmethod
    def zero(cls) -> "NoiseModelSpec":
        return cls(preset="abc_shared")

    @classmethod
    def abc_shared(cls, p_x: float, p_y: float, p_z: float,
                   readout_flip: float | None = None) -> "NoiseModelSpec":
        triple = (p_x, p_y, p_z)
        return cls(triple, triple, readout_flip, "abc_shared")

    @classmethod
    def split_xyz(cls, p1: float, p2: float,
                  readout_flip: float | None = None) -> "NoiseModelSpec":
        return cls((p1, p1, p1), (p2, p2, p2), readout_flip, "split_xyz")

    @classmethod
    def split_xz(cls, p1: float, p2: float,
                 readout_flip: float | None = None) -> "NoiseModelSpec":
        return cls((p1, 0.0, p1), (p2, 0.0, p2), readout_flip, "split_xz")


def build_noise_model(preset: str, v1: float, v2: float,
                      fixed: dict | None = None) -> NoiseModelSpec:
    """Map two swept axis values (plus fixed extras) onto a NoiseModelSpec.

    abc_shared sweeps (p_x, p_z) with p_y held at fixed["p_y"] (default 0);
    split_xyz and split_xz sweep the arity pair (p1, p2). A fixed p_y on
    split_xyz overrides the isotropic Y component; split_xz rejects any
    nonzero fixed p_y.
    """
    fixed = dict(fixed or {})
    readout = fixed.pop("readout_flip", None)
    p_y = fixed.pop("p_y", None)
    if fixed:
        raise ValueError(f"unknown fixed parameters: {sorted(fixed)}")
    if preset == "abc_shared":
        triple = (v1, 0.0 if p_y is None else p_y, v2)
        return NoiseModelSpec(triple, triple, readout, "abc_shared")
    if preset == "split_xyz":
        if p_y is None:
            return NoiseModelSpec.split_xyz(v1, v2, readout)
        return NoiseModelSpec((v1, p_y, v1), (v2, p_y, v2), readout, "split_xyz")
    if preset == "split_xz":
        if p_y not in (None, 0.0):
            raise ValueError("split_xz fixes p_y = 0; pass preset split_xyz to scan p_y")
        return NoiseModelSpec.split_xz(v1, v2, readout)
    raise ValueError(f"unknown preset {preset!r}")


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

def _flip_operators(p_x: float, p_y: float, p_z: float) -> list:
    p_x, p_y, p_z = _validate_triple((p_x, p_y, p_z), "flip channel")
    w0 = 1.0 - p_x - p_y - p_z
    return [
        np.sqrt(max(w0, 0.0)) * _PAULI["I"],
        np.sqrt(p_x) * _PAULI["X"],
        np.sqrt(p_y) * _PAULI["Y"],
        np.sqrt(p_z) * _PAULI["Z"],
    ]


def make_flip_channel(p_x: float, p_y: float, p_z: float) -> KrausChannel:
    """Single-qubit channel K0 = sqrt(1-sum p) 1, K1..3 = sqrt(p) {X, Y, Z}."""
    return KrausChannel(_flip_operators(p_x, p_y, p_z))


def make_two_qubit_channel(triple) -> KrausChannel:
    """Two-qubit channel of all 16 tensor products K_i (x) K_j."""
    ks = _flip_operators(*triple)
    return KrausChannel([np.kron(a, b) for a in ks for b in ks])


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Density matrices recorded at strictly increasing times t_i = (i-1) dt.

    ``params`` carries the originating circuit's parameter record
    (m, J, dt, steps, ...) so a fitting sweep can rebuild the program.
    """

    times: tuple
    states: tuple
    dt: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        states = tuple(self.states)
        if len(times) != len(states) or not times:
            raise ValueError("need equally many times and states, at least one")
        if any(t1 - t0 <= 0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        if any(not isinstance(s, DensityMatrix) for s in states):
            raise TypeError("states must be DensityMatrix instances")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "params", dict(self.params))

    def __len__(self):
        return len(self.times)

    @property
    def entries(self) -> tuple:
        return tuple(zip(self.times, self.states))


def _wrap_density(raw: np.ndarray) -> DensityMatrix:
    # symmetrize accumulated round-off before the invariant checks
    return DensityMatrix((raw + raw.conj().T) / 2.0)


def _checkpoint_times(c: Circuit) -> list:
    return [op.time for op in c.ops if isinstance(op, Checkpoint)]


def _traj_dt(times, c: Circuit) -> float:
    if len(times) >= 2:
        return float(times[1] - times[0])
    return float(c.params.get("dt", 0.0))


def run_density_matrix(c: Circuit, nm: NoiseModelSpec,
                       input: DensityMatrix | None = None,
                       record_every: int = 1) -> Trajectory:
    """Exact noisy evolution: gate, then its flip channel, deterministically.

    The state is recorded at every ``record_every``-th Checkpoint of the
    circuit (always including the first); a circuit without checkpoints
    records its final state once, at t = 0.
    """
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    dim = 2**c.n_qubits
    if input is None:
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
    else:
        if input.n_qubits != c.n_qubits:
            raise ValueError("input dimension does not match the circuit")
        rho = np.array(input.matrix)

    channel_ops = {
        1: [k for k in _flip_operators(*nm.single_qubit) if np.abs(k).max() > 0],
        2: [k for k in make_two_qubit_channel(nm.two_qubit).operators if np.abs(k).max() > 0],
    }
    composed: dict = {}
    times: list = []
    states: list = []
    n_seen = 0
    for op in c.ops:
        if isinstance(op, Barrier):
            continue
        if isinstance(op, Checkpoint):
            if n_seen % record_every == 0:
                times.append(op.time)
                states.append(_wrap_density(rho))
            n_seen += 1
            continue
        key = (op.gate, op.targets)
        mats = composed.get(key)
        if mats is None:
            ops = [k @ op.gate.matrix for k in channel_ops[len(op.targets)]]
            mats = composed[key] = [embed_operator(m, op.targets, c.n_qubits) for m in ops]
        rho = sum(m @ rho @ m.conj().T for m in mats)
    if not times:
        times = [0.0]
        states = [_wrap_density(rho)]
    return Trajectory(tuple(times), tuple(states), _traj_dt(times, c), c.params)


def sample_trajectories(c: Circuit, nm: NoiseModelSpec,
                        input: StateVector | None = None,
                        realizations: int = 20, seed: int = 0) -> Trajectory:
    """Average of seeded unitary noise realizations, recorded at checkpoints.

    Each realization draws one Kraus operator per gate (per tensor factor
    for two-qubit gates), which keeps the trajectory a pure state; the
    returned states are the averaged outer products. Realization r uses
    the independent stream seeded by (seed, r), so results do not depend
    on scheduling order. Converges to run_density_matrix as R grows.
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    dim = 2**c.n_qubits
    if input is None:
        input = StateVector.basis(0, c.n_qubits)
    if input.n_qubits != c.n_qubits:
        raise ValueError("input dimension does not match the circuit")

    check_times = _checkpoint_times(c)
    n_rec = len(check_times) if check_times else 1
    acc = [np.zeros((dim, dim), dtype=complex) for _ in range(n_rec)]

    embeds: dict = {}

    def embedded(mat_key, mat, targets):
        key = (mat_key, targets)
        u = embeds.get(key)
        if u is None:
            u = embeds[key] = embed_operator(mat, targets, c.n_qubits)
        return u

    letters = ("I", "X", "Y", "Z")
    probs1 = np.array([1.0 - sum(nm.single_qubit), *nm.single_qubit])
    probs2 = np.array([1.0 - sum(nm.two_qubit), *nm.two_qubit])
    probs1 = np.clip(probs1, 0.0, None)
    probs2 = np.clip(probs2, 0.0, None)
    probs1 /= probs1.sum()
    probs2 /= probs2.sum()

    for r in range(realizations):
        rng = np.random.default_rng([seed, r])
        psi = np.array(input.amps)
        idx = 0
        for op in c.ops:
            if isinstance(op, Barrier):
                continue
            if isinstance(op, Checkpoint):
                acc[idx] += np.outer(psi, psi.conj())
                idx += 1
                continue
            psi = embedded(op.gate, op.gate.matrix, op.targets) @ psi
            probs = probs1 if len(op.targets) == 1 else probs2
            for q in op.targets:
                pick = letters[rng.choice(4, p=probs)]
                if pick != "I":
                    psi = embedded(pick, _PAULI[pick], (q,)) @ psi
        if not check_times:
            acc[0] += np.outer(psi, psi.conj())

    times = tuple(check_times) if check_times else (0.0,)
    states = tuple(_wrap_density(a / realizations) for a in acc)
    return Trajectory(times, states, _traj_dt(times, c), c.params)


# ---------------------------------------------------------------------------
# readout and tomography
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TomographySetting:
    """Per-qubit measurement basis letters, e.g. ``XZYX``."""

    letters: str

    def __post_init__(self):
        if not self.letters or any(ch not in "XYZ" for ch in self.letters):
            raise ValueError(f"setting letters must be over XYZ, got {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)


def tomography_settings(n_qubits: int) -> list:
    """All 3^n basis combinations in lexicographic order (XX..X first)."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    return [TomographySetting("".join(t))
            for t in itertools.product("XYZ", repeat=n_qubits)]


@dataclass(frozen=True)
class CountsTable:
    """Outcome counts for one measurement setting; counts sum to shots.

    Counts may be floats: exact_readout emits probability-weighted
    "infinite shot" tables used by reconstruction tests.
    """

    setting: str
    shots: int
    counts: dict

    def __post_init__(self):
        TomographySetting(self.setting)
        counts = {str(k): float(v) for k, v in self.counts.items()}
        n = len(self.setting)
        for label, v in counts.items():
            if len(label) != n or any(ch not in "01" for ch in label):
                raise ValueError(f"bad outcome label {label!r} for setting {self.setting}")
            if v < 0:
                raise ValueError(f"negative count for {label!r}")
        total = sum(counts.values())
        if abs(total - self.shots) > 1e-6 * max(1.0, self.shots):
            raise ValueError(f"counts sum {total} != shots {self.shots}")
        object.__setattr__(self, "counts", counts)

    def to_json(self) -> dict:
        counts = {k: (int(v) if float(v).is_integer() else v)
                  for k, v in sorted(self.counts.items())}
        return {"setting": self.setting, "shots": self.shots, "counts": counts}

    @classmethod
    def from_json(cls, obj: dict) -> "CountsTable":
        return cls(obj["setting"], obj["shots"], obj["counts"])


_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
_HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_MEAS_ROT = {"X": _HAD, "Y": _HAD @ _SDG, "Z": np.eye(2, dtype=complex)}


def _measurement_probs(rho: DensityMatrix, setting: TomographySetting,
                       flip: float) -> np.ndarray:
    """Outcome distribution after basis rotation and classical bit flips."""
    n = rho.n_qubits
    if setting.n_qubits != n:
        raise ValueError("setting length does not match the state")
    u = np.array([[1.0 + 0j]])
    for ch in setting.letters:
        u = np.kron(u, _MEAS_ROT[ch])
    probs = np.real(np.diag(u @ rho.matrix @ u.conj().T))
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    if flip > 0.0:
        t = np.array([[1.0 - flip, flip], [flip, 1.0 - flip]])
        grid = probs.reshape([2] * n)
        for axis in range(n):
            grid = np.moveaxis(np.tensordot(t, grid, axes=([1], [axis])), 0, axis)
        probs = grid.reshape(-1)
    return probs


def simulate_readout(rho: DensityMatrix, setting: TomographySetting,
                     flip: float = 0.0, shots: int = DEFAULT_SHOTS,
                     seed=0) -> CountsTable:
    """Multinomial shot sampling of one tomography setting."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0.0 <= flip <= 1.0:
        raise ValueError("flip probability must be in [0, 1]")
    probs = _measurement_probs(rho, setting, flip)
    rng = np.random.default_rng(seed)
    sampled = rng.multinomial(shots, probs)
    n = rho.n_qubits
    counts = {format(i, f"0{n}b"): int(k) for i, k in enumerate(sampled) if k}
    return CountsTable(setting.letters, shots, counts)


def exact_readout(rho: DensityMatrix, setting: TomographySetting,
                  flip: float = 0.0, shots: int = DEFAULT_SHOTS) -> CountsTable:
    """Infinite-shot limit: counts are exact probabilities times shots."""
    probs = _measurement_probs(rho, setting, flip)
    n = rho.n_qubits
    counts = {format(i, f"0{n}b"): shots * p for i, p in enumerate(probs) if p > 0}
    return CountsTable(setting.letters, shots, counts)


def reconstruct_state(tables) -> DensityMatrix:
    """Linear-inversion tomography with PSD projection.

    rho_hat = (1/2^n) sum_P <P> P over all 4^n Pauli strings; strings
    containing I are estimated from the marginals of every compatible
    setting and averaged over them. Negative eigenvalues of the inversion
    are clipped to zero and the trace renormalized.
    """
    tables = list(tables)
    if not tables:
        raise ValueError("no counts tables given")
    n = len(tables[0].setting)
    expected = {s.letters for s in tomography_settings(n)}
    by_setting: dict = {}
    shots = tables[0].shots
    for t in tables:
        if t.shots != shots:
            raise ValueError("all tables must share one shot count")
        if t.setting in by_setting:
            raise ValueError(f"duplicate setting {t.setting}")
        by_setting[t.setting] = t
    missing = expected - set(by_setting)
    if missing:
        raise ValueError(f"missing settings: {sorted(missing)[:5]} ({len(missing)} total)")

    dim = 2**n
    freq = {s: np.zeros(dim) for s in by_setting}
    for s, t in by_setting.items():
        for label, v in t.counts.items():
            freq[s][int(label, 2)] = v / shots

    signs: dict = {}

    def sign_vector(mask: int) -> np.ndarray:
        v = signs.get(mask)
        if v is None:
            v = np.array([(-1) ** bin(i & mask).count("1") for i in range(dim)], dtype=float)
            signs[mask] = v
        return v

    rho = np.eye(dim, dtype=complex) / dim
    for letters in itertools.product("IXYZ", repeat=n):
        pauli = "".join(letters)
        if set(pauli) == {"I"}:
            continue
        mask = 0
        for q, ch in enumerate(letters):
            if ch != "I":
                mask |= 1 << (n - 1 - q)
        compatible = [s for s in by_setting
                      if all(ch == "I" or s[q] == ch for q, ch in enumerate(letters))]
        est = float(np.mean([sign_vector(mask) @ freq[s] for s in compatible]))
        rho += (est / dim) * PauliString(pauli).matrix()

    rho = (rho + rho.conj().T) / 2.0
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    return DensityMatrix((v * w) @ v.conj().T)
