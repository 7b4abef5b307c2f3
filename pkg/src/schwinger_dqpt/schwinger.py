"""Two-site Z2-Schwinger quench physics in the gauge-invariant subspace.

The model is a staggered-fermion lattice QED ring with two matter sites
and two Z2 links, encoded on four qubits as |q0 q1 q2 q3> with

* q0 = link between sites 0 and 1, q3 = link between sites 1 and 0,
  |0> meaning field +sqrt(pi)/2 and |1> meaning -sqrt(pi)/2;
* q1 = matter site 0 (positive mass), q2 = matter site 1 (negative
  mass), |1> meaning occupied.

The Gauss law singles out four states: two Dirac vacua (occupied
negative-mass site, constant background field of either sign) and two
mesons (fermion moved to the positive-mass site, with the field kink on
one link or the other). All pre/post-quench dynamics of the mass quench
H(m, J) -> H(-m, J) happens inside this block, which is what makes exact
closed forms available as oracles for the circuit simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcore import StateVector, _PAULI

__all__ = [
    "ModelParams",
    "PhysicalBasis",
    "PHYSICAL_BASIS",
    "Spectrum",
    "LoschmidtSeries",
    "GaussReport",
    "PhaseField",
    "WindingLoop",
    "NoExactDqptError",
    "UndefinedPhaseError",
    "build_physical_hamiltonian",
    "spin_hamiltonian",
    "diagonalize",
    "quenched_block_hamiltonian",
    "analytic_loschmidt",
    "loschmidt_oracle",
    "dqpt_times",
    "gauss_check",
    "rate_function",
    "analytic_phase_field",
    "winding_number",
    "EPS_PHASE",
    "EPS_FLOOR",
]

EPS_PHASE = 1e-8    # echo below this leaves the phase undefined
EPS_FLOOR = 1e-15   # echo clamp for the rate function


class NoExactDqptError(ValueError):
    """Exact critical times exist only on the J = m quench line."""


class UndefinedPhaseError(ValueError):
    """The Loschmidt phase is undefined where the echo (numerically) vanishes."""


@dataclass(frozen=True)
class ModelParams:
    """Quench parameters: mass m, hopping J, both > 0; quench_sign flips the mass."""

    m: float
    J: float
    n_sites: int = 2
    gauge_n: int = 2
    quench_sign: int = 1

    def __post_init__(self):
        if not (self.m > 0 and self.J > 0):
            raise ValueError(f"need m > 0 and J > 0, got m={self.m}, J={self.J}")
        if self.n_sites != 2 or self.gauge_n != 2:
            raise ValueError("only the two-site Z2 model is implemented")
        if self.quench_sign not in (1, -1):
            raise ValueError(f"quench_sign must be +1 or -1, got {self.quench_sign}")

    def quenched(self) -> "ModelParams":
        """Same couplings with the mass sign flipped."""
        return ModelParams(self.m, self.J, self.n_sites, self.gauge_n, -self.quench_sign)

    @property
    def signed_mass(self) -> float:
        return self.quench_sign * self.m


@dataclass(frozen=True)
class PhysicalBasis:
    """The four gauge-invariant basis states and their 4-bit encodings."""

    names: tuple = ("vacuum_minus", "vacuum_plus", "meson_left", "meson_right")
    labels: tuple = ("1011", "0010", "0101", "1100")

    @property
    def indices(self) -> tuple:
        return tuple(int(s, 2) for s in self.labels)

    def embed(self, vec4) -> np.ndarray:
        """Lift a 4-component physical-basis vector into the 16-dim qubit space."""
        vec4 = np.asarray(vec4, dtype=complex).reshape(4)
        out = np.zeros(16, dtype=complex)
        for k, idx in enumerate(self.indices):
            out[idx] = vec4[k]
        return out

    def project(self, vec16) -> np.ndarray:
        """Restrict a 16-dim qubit vector to its physical-basis components."""
        vec16 = np.asarray(vec16, dtype=complex).reshape(16)
        return np.array([vec16[idx] for idx in self.indices])

    def state(self, vec4) -> StateVector:
        return StateVector(self.embed(vec4))

    def population(self, state) -> float:
        """Total probability weight carried by the four physical states."""
        if isinstance(state, StateVector):
            probs = state.probabilities()
        else:
            probs = state.populations()
        return float(sum(probs[idx] for idx in self.indices))


PHYSICAL_BASIS = PhysicalBasis()


def build_physical_hamiltonian(p: ModelParams) -> np.ndarray:
    """4x4 Hamiltonian over (vac-, vac+, meson_L, meson_R).

    Diagonal is (-m, -m, +m, +m) times quench_sign; each vacuum couples
    to each meson with J/2 (the two hopping routes around the ring).
    """
    m, J = p.signed_mass, p.J
    return np.array([
        [-m, 0.0, J / 2, J / 2],
        [0.0, -m, J / 2, J / 2],
        [J / 2, J / 2, m, 0.0],
        [J / 2, J / 2, 0.0, m],
    ], dtype=complex)


def _embed_single(op: np.ndarray, q: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for j in range(4):
        out = np.kron(out, op if j == q else np.eye(2))
    return out


def spin_hamiltonian(p: ModelParams) -> np.ndarray:
    """Full 16x16 qubit Hamiltonian.

    H = (J/4) [ X_q0 (X_q1 X_q2 + Y_q1 Y_q2) + X_q3 (X_q1 X_q2 + Y_q1 Y_q2) ]
        - (m/2) (Z_q1 - Z_q2)

    Restricted to the physical basis this reproduces
    build_physical_hamiltonian; the subspace is exactly invariant.
    """
    m, J = p.signed_mass, p.J
    Xs = [_embed_single(_PAULI["X"], q) for q in range(4)]
    Ys = [_embed_single(_PAULI["Y"], q) for q in range(4)]
    Zs = [_embed_single(_PAULI["Z"], q) for q in range(4)]
    matter = Xs[1] @ Xs[2] + Ys[1] @ Ys[2]
    h = (J / 4) * (Xs[0] @ matter + Xs[3] @ matter)
    h -= (m / 2) * (Zs[1] - Zs[2])
    return h


@dataclass(frozen=True)
class Spectrum:
    """Closed-form eigensystem of the 4x4 physical Hamiltonian.

    energies are ascending {-sqrt(m^2+J^2), -|m|, +|m|, +sqrt(m^2+J^2)};
    states[:, k] is the k-th eigenvector over (vac-, vac+, L, R); parity
    labels the behaviour under vac+<->vac-, L<->R exchange. a/b amplitudes
    describe the even eigenvectors: psi = a (vac- + vac+) + b (L + R).
    """

    energies: np.ndarray
    states: np.ndarray
    parity: tuple
    a_g: float
    b_g: float
    a_gbar: float
    b_gbar: float
    p_g: float
    p_gbar: float

    @property
    def ground(self) -> np.ndarray:
        return self.states[:, 0]

    def ground_state(self) -> StateVector:
        return PHYSICAL_BASIS.state(self.ground)


def _even_amplitudes(m_signed: float, J: float):
    """Even-sector amplitude pairs (a, b) with b/a = p = (m -+ sqrt(m^2+J^2))/J."""
    energy = math.hypot(m_signed, J)
    p_g = (m_signed - energy) / J
    p_gbar = (m_signed + energy) / J
    a_g = 1.0 / math.sqrt(2.0 * (1.0 + p_g * p_g))
    a_gbar = 1.0 / math.sqrt(2.0 * (1.0 + p_gbar * p_gbar))
    return a_g, a_g * p_g, a_gbar, a_gbar * p_gbar, p_g, p_gbar


def diagonalize(p: ModelParams) -> Spectrum:
    m, J = p.signed_mass, p.J
    energy = math.hypot(m, J)
    a_g, b_g, a_gbar, b_gbar, p_g, p_gbar = _even_amplitudes(m, J)
    inv = 1.0 / math.sqrt(2.0)
    # columns: psi_g, psi_e, psi_ebar, psi_gbar over (vac-, vac+, L, R)
    states = np.array([
        [a_g, -inv, 0.0, a_gbar],
        [a_g, inv, 0.0, a_gbar],
        [b_g, 0.0, inv, b_gbar],
        [b_g, 0.0, -inv, b_gbar],
    ])
    energies = np.array([-energy, -abs(m), abs(m), energy])
    # the odd vacuum combination carries energy -m (signed), the odd meson +m;
    # ascending order swaps them when the quench sign is negative
    if m >= 0:
        parity = ("even", "odd", "odd", "even")
    else:
        states = states[:, [0, 2, 1, 3]]
        parity = ("even", "odd", "odd", "even")
    return Spectrum(energies, states, parity, a_g, b_g, a_gbar, b_gbar, p_g, p_gbar)


def quenched_block_hamiltonian(p: ModelParams):
    """H(-m, J) expressed in the eigenbasis of H(m, J).

    Returns (odd_block, even_block): the odd 2x2 block diag(m, -m) over
    (psi_e, psi_ebar) and the even 2x2 block over (psi_g, psi_gbar):

        [[-(J^2-m^2)/sqrt(m^2+J^2),  2Jm/sqrt(m^2+J^2)],
         [ 2Jm/sqrt(m^2+J^2),       (J^2-m^2)/sqrt(m^2+J^2)]]
    """
    m, J = p.signed_mass, p.J
    energy = math.hypot(m, J)
    odd = np.diag([m, -m]).astype(float)
    delta = (J * J - m * m) / energy
    off = 2.0 * J * m / energy
    even = np.array([[-delta, off], [off, delta]])
    return odd, even


@dataclass(frozen=True)
class LoschmidtSeries:
    """Loschmidt amplitude samples G(t) = <psi_g|psi(t)> with derived columns.

    echo = |G|^2, phase = arg G in (-pi, pi], rate = -ln(echo)/n_dof with
    the echo clamped at EPS_FLOOR (rate_clamped marks clamped points).
    """

    times: np.ndarray
    amplitude: np.ndarray
    n_dof: int = 2

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        amps = np.asarray(self.amplitude, dtype=complex)
        if times.shape != amps.shape:
            raise ValueError("times and amplitude must have matching shapes")
        if self.n_dof <= 0:
            raise ValueError("n_dof must be positive")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amplitude", amps)

    @property
    def echo(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.amplitude)

    @property
    def rate(self) -> np.ndarray:
        return rate_function(self.echo, self.n_dof)[0]

    @property
    def rate_clamped(self) -> np.ndarray:
        return rate_function(self.echo, self.n_dof)[1]


def analytic_loschmidt(p: ModelParams, times) -> LoschmidtSeries:
    """Closed-form quench amplitude G(t) = <psi_g| exp(-i H(-m,J) t) |psi_g>.

    Only the even sector contributes. The quenched eigenstates are the
    (a, b) pairs with b negated, so the spectral weights are

        |<psi_g|psi'_g>|^2    = (2 a_g a_gbar - 2 b_g b_gbar)^2 = J^2/(m^2+J^2)
        |<psi_g|psi'_gbar>|^2 = (2 a_g^2 - 2 b_g^2)^2           = m^2/(m^2+J^2)

    giving G(t) = w_g e^{-i E_g t} + w_gbar e^{-i E_gbar t} with
    E_g/gbar = -+sqrt(m^2+J^2). At J = m this reduces to cos(sqrt(2) m t)
    and the echo to cos^2(sqrt(2) m t).
    """
    m, J = abs(p.signed_mass), p.J
    times = np.asarray(times, dtype=float)
    energy = math.hypot(m, J)
    a_g, b_g, a_gbar, b_gbar, _, _ = _even_amplitudes(m, J)
    w_g = (2 * a_g * a_gbar - 2 * b_g * b_gbar) ** 2
    w_gbar = (2 * a_g * a_g - 2 * b_g * b_g) ** 2
    amp = w_g * np.exp(1j * energy * times) + w_gbar * np.exp(-1j * energy * times)
    return LoschmidtSeries(times, amp)


def loschmidt_oracle(p: ModelParams, times) -> np.ndarray:
    """Independent amplitude oracle: dense 4x4 eigendecomposition propagator.

    Builds the quenched Hamiltonian matrix, diagonalizes it numerically
    and propagates the numerically-diagonalized ground state of H(m, J).
    Shares no code path with analytic_loschmidt beyond the matrix builder.
    """
    times = np.asarray(times, dtype=float)
    h0 = build_physical_hamiltonian(p)
    w0, v0 = np.linalg.eigh(h0)
    psi0 = v0[:, 0]
    hq = build_physical_hamiltonian(p.quenched())
    w, v = np.linalg.eigh(hq)
    coeff = v.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times, w))
    return phases @ (coeff * coeff.conj())


def dqpt_times(p: ModelParams, count: int = 2) -> np.ndarray:
    """Critical times t_j = (2j+1) pi / (2 sqrt(2) m), j = 0..count-1.

    Exact echo zeros exist only when J = m (the two spectral weights then
    balance); anywhere else the echo stays strictly positive.
    """
    m, J = abs(p.signed_mass), p.J
    if abs(J - m) > 1e-12 * max(m, J):
        raise NoExactDqptError(f"exact echo zeros require J = m, got m={m}, J={J}")
    if count < 1:
        raise ValueError("count must be >= 1")
    j = np.arange(count)
    return (2 * j + 1) * math.pi / (2 * math.sqrt(2.0) * m)


@dataclass(frozen=True)
class GaussReport:
    """Per-site Gauss-law residuals (mod 2) for a basis-state label."""

    label: str
    residuals: tuple
    ok: bool


def gauss_check(label: str) -> GaussReport:
    """Check the Z2 Gauss law on a 4-bit computational label.

    G_x = sqrt(n/2pi)(E_{x,x+1} - E_{x-1,x}) - psi^dag psi_x - ((-1)^x - 1)/2
    evaluated at x = 0, 1 with fields +-1/2 in units sqrt(1/pi) E. The Z2
    field is defined modulo two units, so residuals are reduced mod 2 and
    the state is physical iff both vanish.
    """
    if len(label) != 4 or any(ch not in "01" for ch in label):
        raise ValueError(f"expected a 4-bit label like '1011', got {label!r}")
    q = [int(ch) for ch in label]
    # sqrt(1/pi) E = +1/2 for |0>, -1/2 for |1>
    e01 = 0.5 if q[0] == 0 else -0.5
    e10 = 0.5 if q[3] == 0 else -0.5
    g0 = (e01 - e10) - q[1]
    g1 = (e10 - e01) - q[2] + 1
    residuals = (int(g0) % 2, int(g1) % 2)
    return GaussReport(label, residuals, residuals == (0, 0))


def rate_function(echo, n_dof: int = 2, floor: float = EPS_FLOOR):
    """Return (rate, clamped): rate = -ln(max(echo, floor)) / n_dof.

    Echoes below ``floor`` are clamped before the log and flagged in the
    boolean mask, so exact DQPT zeros report a finite ceiling instead of
    infinity.
    """
    echo = np.asarray(echo, dtype=float)
    if n_dof <= 0:
        raise ValueError("n_dof must be positive")
    if np.any(echo < -1e-12) or np.any(echo > 1.0 + 1e-9):
        raise ValueError("echo values must lie in [0, 1]")
    clamped = echo < floor
    rate = -np.log(np.clip(echo, floor, None)) / n_dof
    return rate, clamped


# ---------------------------------------------------------------------------
# phase field and winding numbers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseField:
    """Loschmidt phase samples phi(J, t) on a rectangular grid.

    phase[i, j] = arg G at (j_values[i], t_values[j]); echo carries the
    matching |G|^2 so undefined-phase points (echo < EPS_PHASE) are known.
    """

    j_values: np.ndarray
    t_values: np.ndarray
    phase: np.ndarray
    echo: np.ndarray

    def __post_init__(self):
        jv = np.asarray(self.j_values, dtype=float)
        tv = np.asarray(self.t_values, dtype=float)
        ph = np.asarray(self.phase, dtype=float)
        ec = np.asarray(self.echo, dtype=float)
        if ph.shape != (jv.size, tv.size) or ec.shape != ph.shape:
            raise ValueError("phase/echo grids must be (len(j_values), len(t_values))")
        for name, vals in (("j_values", jv), ("t_values", tv)):
            if vals.size < 2 or np.any(np.diff(vals) <= 0):
                raise ValueError(f"{name} must be strictly increasing with >= 2 points")
        object.__setattr__(self, "j_values", jv)
        object.__setattr__(self, "t_values", tv)
        object.__setattr__(self, "phase", ph)
        object.__setattr__(self, "echo", ec)

    @property
    def defined(self) -> np.ndarray:
        return self.echo >= EPS_PHASE

    @property
    def shape(self) -> tuple:
        return self.phase.shape


def analytic_phase_field(m: float, j_values, t_values) -> PhaseField:
    """Phase field of the closed-form amplitude over a (J, t) grid."""
    j_values = np.asarray(j_values, dtype=float)
    t_values = np.asarray(t_values, dtype=float)
    phase = np.empty((j_values.size, t_values.size))
    echo = np.empty_like(phase)
    for i, J in enumerate(j_values):
        series = analytic_loschmidt(ModelParams(m=m, J=float(J)), t_values)
        phase[i] = series.phase
        echo[i] = series.echo
    return PhaseField(j_values, t_values, phase, echo)


@dataclass(frozen=True)
class WindingLoop:
    """Closed lattice loop: ordered (i, j) grid points, neighbours step by one."""

    points: tuple

    def __post_init__(self):
        pts = tuple((int(i), int(j)) for i, j in self.points)
        if len(pts) < 3 or pts[0] != pts[-1]:
            raise ValueError("loop must be closed (first point equals last)")
        for (i0, j0), (i1, j1) in zip(pts, pts[1:]):
            if abs(i0 - i1) + abs(j0 - j1) != 1:
                raise ValueError(f"loop points {(i0, j0)} -> {(i1, j1)} are not grid neighbours")
        object.__setattr__(self, "points", pts)

    @classmethod
    def plaquette(cls, i: int, j: int) -> "WindingLoop":
        """Counterclockwise elementary cell with lower-left corner (i, j)."""
        return cls(((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1), (i, j)))

    @classmethod
    def rectangle(cls, i0: int, j0: int, i1: int, j1: int) -> "WindingLoop":
        """Counterclockwise boundary of the index rectangle [i0, i1] x [j0, j1]."""
        if not (i1 > i0 and j1 > j0):
            raise ValueError("need i1 > i0 and j1 > j0")
        pts = [(i, j0) for i in range(i0, i1)]
        pts += [(i1, j) for j in range(j0, j1)]
        pts += [(i, j1) for i in range(i1, i0, -1)]
        pts += [(i0, j) for j in range(j1, j0 - 1, -1)]
        return cls(tuple(pts))


def _wrap_phase(d: float) -> float:
    """Reduce a phase difference into (-pi, pi]."""
    return -((-d + math.pi) % (2 * math.pi) - math.pi)


def winding_number(field: PhaseField, loop: WindingLoop) -> int:
    """Winding of the phase around a closed grid loop (counterclockwise positive).

    Sums the wrapped phase differences along the loop; the result is an
    exact multiple of 2 pi. Raises UndefinedPhaseError if the loop touches
    a point where the echo is below EPS_PHASE.
    """
    ni, nj = field.shape
    for i, j in loop.points:
        if not (0 <= i < ni and 0 <= j < nj):
            raise ValueError(f"loop point {(i, j)} outside the {ni}x{nj} grid")
        if not field.defined[i, j]:
            raise UndefinedPhaseError(
                f"phase undefined at grid point {(i, j)}: echo {field.echo[i, j]:.3e} < {EPS_PHASE}")
    total = 0.0
    for (i0, j0), (i1, j1) in zip(loop.points, loop.points[1:]):
        total += _wrap_phase(field.phase[i1, j1] - field.phase[i0, j0])
    nu = total / (2 * math.pi)
    rounded = round(nu)
    if abs(nu - rounded) > 1e-9:
        raise ValueError(f"winding sum {nu!r} is not an integer multiple of 2 pi")
    return int(rounded)
