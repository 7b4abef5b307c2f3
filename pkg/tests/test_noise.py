"""Unit tests for noise channels, density-matrix evolution, Monte Carlo
sampling, and readout tomography."""

import json

import numpy as np
import pytest

from schwinger_dqpt.circuits import (
    Circuit,
    build_ground_prep,
    build_quench_program,
    run_statevector,
)
from schwinger_dqpt.noise import (
    DEFAULT_SHOTS,
    CountsTable,
    NoiseModelSpec,
    TomographySetting,
    build_noise_model,
    exact_readout,
    make_flip_channel,
    make_two_qubit_channel,
    reconstruct_state,
    run_density_matrix,
    sample_trajectories,
    simulate_readout,
    tomography_settings,
)
from schwinger_dqpt.qcore import DensityMatrix, StateVector, apply_channel, trace_distance
from schwinger_dqpt.schwinger import PHYSICAL_BASIS, ModelParams

P11 = ModelParams(1.0, 1.0)


def kraus_completeness(channel) -> float:
    total = sum(k.conj().T @ k for k in channel.operators)
    return float(np.abs(total - np.eye(total.shape[0])).max())


def random_density(rng: np.random.Generator, n: int) -> DensityMatrix:
    d = 2 ** n
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


# ---------------------------------------------------------------------------
# model specification
# ---------------------------------------------------------------------------

class TestNoiseModelSpec:
    def test_triple_validation(self):
        with pytest.raises(ValueError):
            NoiseModelSpec((-0.1, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0, "custom")
        with pytest.raises(ValueError):
            NoiseModelSpec((0.5, 0.4, 0.2), (0.0, 0.0, 0.0), 0.0, "custom")
        with pytest.raises(ValueError):
            NoiseModelSpec((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 1.5, "custom")

    def test_zero_preset_is_noiseless(self):
        nm = NoiseModelSpec.zero()
        assert nm.is_noiseless
        assert nm.readout_probability == 0.0

    def test_readout_defaults_to_bit_flip_rate(self):
        nm = NoiseModelSpec.split_xz(0.01, 0.016)
        assert nm.readout_flip is None
        assert nm.readout_probability == pytest.approx(0.01)
        explicit = NoiseModelSpec.split_xz(0.01, 0.016, 0.03)
        assert explicit.readout_probability == pytest.approx(0.03)

    def test_abc_shared_uses_one_triple_everywhere(self):
        nm = NoiseModelSpec.abc_shared(0.011, 0.0, 0.015)
        assert nm.single_qubit == nm.two_qubit == (0.011, 0.0, 0.015)

    def test_split_presets_differ_per_arity(self):
        nm = NoiseModelSpec.split_xyz(0.01, 0.016)
        assert nm.single_qubit == (0.01, 0.01, 0.01)
        assert nm.two_qubit == (0.016, 0.016, 0.016)
        nm = NoiseModelSpec.split_xz(0.01, 0.016)
        assert nm.single_qubit == (0.01, 0.0, 0.01)
        assert nm.two_qubit == (0.016, 0.0, 0.016)

    def test_build_noise_model_dispatch(self):
        nm = build_noise_model("abc_shared", 0.011, 0.015)
        assert nm.single_qubit == (0.011, 0.0, 0.015)
        nm = build_noise_model("split_xz", 0.01, 0.016)
        assert nm.preset == "split_xz"
        with pytest.raises(ValueError):
            build_noise_model("depolarizing", 0.01, 0.01)
        with pytest.raises(ValueError):
            build_noise_model("split_xz", 0.01, 0.016, fixed={"p_q": 0.1})

    def test_split_xz_rejects_y_component(self):
        with pytest.raises(ValueError):
            build_noise_model("split_xz", 0.01, 0.016, fixed={"p_y": 0.01})

    def test_split_xyz_fixed_y(self):
        nm = build_noise_model("split_xyz", 0.01, 0.016, fixed={"p_y": 0.002})
        assert nm.single_qubit == (0.01, 0.002, 0.01)
        assert nm.two_qubit == (0.016, 0.002, 0.016)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

class TestChannels:
    def test_flip_channel_completeness(self):
        for triple in ((0.01, 0.0, 0.0), (0.1, 0.05, 0.02), (0.0, 0.0, 0.0)):
            ch = make_flip_channel(*triple)
            assert kraus_completeness(ch) < 1e-12

    def test_two_qubit_channel_shape_and_completeness(self):
        ch = make_two_qubit_channel((0.01, 0.002, 0.005))
        assert all(k.shape == (4, 4) for k in ch.operators)
        assert kraus_completeness(ch) < 1e-12

    def test_two_qubit_channel_is_tensor_square(self):
        # acting with the 16-operator channel equals acting with the
        # single-qubit channel independently on each factor
        triple = (0.02, 0.01, 0.03)
        one = make_flip_channel(*triple)
        two = make_two_qubit_channel(triple)
        rng = np.random.default_rng(7)
        for _ in range(3):
            rho = random_density(rng, 2)
            joint = apply_channel(rho, two, (0, 1))
            seq = apply_channel(apply_channel(rho, one, (0,)), one, (1,))
            assert np.abs(joint.matrix - seq.matrix).max() < 1e-12

    def test_trace_preserved_through_channel(self):
        rng = np.random.default_rng(3)
        ch = make_flip_channel(0.2, 0.1, 0.05)
        for _ in range(5):
            rho = random_density(rng, 1).matrix
            out = sum(k @ rho @ k.conj().T for k in ch.operators)
            assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# density-matrix evolution
# ---------------------------------------------------------------------------

class TestRunDensityMatrix:
    def test_noiseless_matches_statevector(self):
        prog = build_quench_program(P11, dt=0.1, steps=3)
        traj = run_density_matrix(prog, NoiseModelSpec.zero())
        psi = run_statevector(prog)
        final = traj.states[-1].matrix
        assert np.abs(final - psi.density_matrix().matrix).max() < 1e-12

    def test_checkpoint_times_recorded(self):
        prog = build_quench_program(P11, dt=0.1, steps=4)
        traj = run_density_matrix(prog, NoiseModelSpec.zero())
        assert list(traj.times) == pytest.approx([0.1 * k for k in range(5)])

    def test_record_every(self):
        prog = build_quench_program(P11, dt=0.1, steps=4)
        traj = run_density_matrix(prog, NoiseModelSpec.zero(), record_every=2)
        assert list(traj.times) == pytest.approx([0.0, 0.2, 0.4])

    def test_no_checkpoints_gives_single_final_state(self):
        c = build_ground_prep(P11)
        traj = run_density_matrix(c, NoiseModelSpec.zero())
        assert len(traj) == 1
        assert traj.times[0] == 0.0

    def test_states_stay_physical_under_noise(self):
        prog = build_quench_program(P11, dt=0.1, steps=5)
        nm = NoiseModelSpec.split_xz(0.01, 0.016)
        traj = run_density_matrix(prog, nm)
        for dm in traj.states:
            m = dm.matrix
            assert np.trace(m).real == pytest.approx(1.0, abs=1e-9)
            assert np.abs(m - m.conj().T).max() < 1e-9
            assert np.linalg.eigvalsh(m).min() > -1e-9

    def test_noise_strictly_reduces_purity(self):
        prog = build_quench_program(P11, dt=0.1, steps=3)
        nm = NoiseModelSpec.split_xz(0.01, 0.016)
        rho = run_density_matrix(prog, nm).states[-1].matrix
        assert np.trace(rho @ rho).real < 1.0 - 1e-3

    def test_long_run_approaches_maximally_mixed(self):
        # strong bit and phase flips scramble toward I/16 and the distance
        # to it is non-increasing once transients are gone
        prog = build_quench_program(P11, dt=0.1, steps=100)
        nm = NoiseModelSpec.abc_shared(0.01, 0.0, 0.015)
        traj = run_density_matrix(prog, nm)
        mixed = DensityMatrix.maximally_mixed(4)
        dists = [trace_distance(dm, mixed) for dm in traj.states]
        assert dists[-1] <= 0.1
        for i, label in enumerate(PHYSICAL_BASIS.labels):
            pop = traj.states[-1].populations()[int(label, 2)]
            assert abs(pop - 1.0 / 16.0) < 0.02
        for a, b in zip(dists[10:], dists[11:]):
            assert b <= a + 1e-6

    def test_input_validation(self):
        with pytest.raises(ValueError):
            run_density_matrix(Circuit(2).h(0), NoiseModelSpec.zero(),
                               input=DensityMatrix.maximally_mixed(1))
        with pytest.raises(ValueError):
            run_density_matrix(Circuit(2).h(0), NoiseModelSpec.zero(), record_every=0)

    def test_density_input_accepted(self):
        mixed = DensityMatrix.maximally_mixed(1)
        traj = run_density_matrix(Circuit(1).x(0), NoiseModelSpec.zero(), input=mixed)
        assert np.abs(traj.states[-1].matrix - mixed.matrix).max() < 1e-12


class TestTrajectoryContainer:
    def test_entries_and_len(self):
        prog = build_quench_program(P11, dt=0.1, steps=2)
        traj = run_density_matrix(prog, NoiseModelSpec.zero())
        assert len(traj) == 3
        for (t, dm), t_ref in zip(traj.entries, traj.times):
            assert t == t_ref
            assert isinstance(dm, DensityMatrix)

    def test_monotone_times_enforced(self):
        prog = build_quench_program(P11, dt=0.1, steps=1)
        traj = run_density_matrix(prog, NoiseModelSpec.zero())
        with pytest.raises(ValueError):
            type(traj)(np.array([0.2, 0.1]), tuple(traj.states[:2]),
                       traj.dt, traj.params)


# ---------------------------------------------------------------------------
# Monte Carlo sampling
# ---------------------------------------------------------------------------

class TestSampleTrajectories:
    def test_noiseless_sampling_is_exact(self):
        prog = build_quench_program(P11, dt=0.1, steps=2)
        avg = sample_trajectories(prog, NoiseModelSpec.zero(), realizations=3, seed=1)
        exact = run_density_matrix(prog, NoiseModelSpec.zero())
        assert np.abs(avg.states[-1].matrix - exact.states[-1].matrix).max() < 1e-12

    def test_seed_determinism(self):
        prog = build_quench_program(P11, dt=0.1, steps=2)
        nm = NoiseModelSpec.split_xz(0.05, 0.08)
        a = sample_trajectories(prog, nm, realizations=10, seed=42)
        b = sample_trajectories(prog, nm, realizations=10, seed=42)
        assert np.array_equal(a.states[-1].matrix, b.states[-1].matrix)
        c = sample_trajectories(prog, nm, realizations=10, seed=43)
        assert np.abs(c.states[-1].matrix - a.states[-1].matrix).max() > 0

    def test_monte_carlo_error_shrinks_like_root_n(self):
        # T(avg, exact) ~ 1/sqrt(R): quadrupling R should roughly halve it,
        # so the 16x ratio sits near 4 (wide band, it is a noisy estimate)
        prog = build_quench_program(P11, dt=0.1, steps=1)
        nm = NoiseModelSpec.split_xz(0.05, 0.08)
        exact = run_density_matrix(prog, nm).states[-1]
        errs = {}
        for r in (100, 1600):
            avg = sample_trajectories(prog, nm, realizations=r, seed=11)
            errs[r] = trace_distance(avg.states[-1], exact)
        assert errs[1600] < errs[100]
        assert 2.0 <= errs[100] / errs[1600] <= 8.0

    def test_realizations_validation(self):
        prog = build_quench_program(P11, dt=0.1, steps=1)
        with pytest.raises(ValueError):
            sample_trajectories(prog, NoiseModelSpec.zero(), realizations=0)


# ---------------------------------------------------------------------------
# tomography
# ---------------------------------------------------------------------------

class TestSettings:
    def test_count_and_order(self):
        settings = tomography_settings(4)
        assert len(settings) == 81
        assert settings[0].letters == "XXXX"
        assert settings[-1].letters == "ZZZZ"
        assert settings[1].letters == "XXXY"  # last qubit varies fastest

    def test_letters_validated(self):
        with pytest.raises(ValueError):
            TomographySetting("XXAZ")
        with pytest.raises(ValueError):
            tomography_settings(0)


class TestCountsTable:
    def test_shot_sum_enforced(self):
        CountsTable("Z", 10, {"0": 7.0, "1": 3.0})
        with pytest.raises(ValueError):
            CountsTable("Z", 10, {"0": 7.0, "1": 4.0})
        with pytest.raises(ValueError):
            CountsTable("Z", 10, {"00": 10.0})  # wrong string length
        with pytest.raises(ValueError):
            CountsTable("Z", 10, {"0": -1.0, "1": 11.0})

    def test_json_round_trip(self):
        table = CountsTable("XZ", 8, {"00": 5.0, "11": 3.0})
        back = CountsTable.from_json(table.to_json())
        assert back.setting == "XZ"
        assert back.shots == 8
        assert back.counts == table.counts
        json.dumps(table.to_json())  # wire format is plain JSON types


class TestReadout:
    def test_exact_readout_z_basis(self):
        rho = StateVector.basis("01").density_matrix()
        table = exact_readout(rho, TomographySetting("ZZ"))
        assert table.counts.get("01", 0.0) == pytest.approx(DEFAULT_SHOTS)

    def test_exact_readout_x_basis(self):
        plus = StateVector(np.array([1.0, 1.0]) / np.sqrt(2.0))
        table = exact_readout(plus.density_matrix(), TomographySetting("X"))
        assert table.counts.get("0", 0.0) == pytest.approx(DEFAULT_SHOTS)

    def test_readout_flip_mixes_counts(self):
        rho = StateVector.basis("0").density_matrix()
        table = exact_readout(rho, TomographySetting("Z"), flip=0.1)
        assert table.counts["0"] == pytest.approx(0.9 * DEFAULT_SHOTS)
        assert table.counts["1"] == pytest.approx(0.1 * DEFAULT_SHOTS)

    def test_simulate_readout_matches_exact_in_expectation(self):
        rng_state = StateVector(np.array([0.6, 0.8j]))
        rho = rng_state.density_matrix()
        setting = TomographySetting("Z")
        exact = exact_readout(rho, setting, shots=1)
        total = {"0": 0.0, "1": 0.0}
        n_rep = 400
        for s in range(n_rep):
            t = simulate_readout(rho, setting, shots=64, seed=s)
            for k, v in t.counts.items():
                total[k] += v
        p0 = total["0"] / (64 * n_rep)
        se = np.sqrt(0.36 * 0.64 / (64 * n_rep))
        assert abs(p0 - exact.counts.get("0", 0.0)) < 4 * se

    def test_simulate_readout_deterministic_per_seed(self):
        rho = StateVector.basis("10").density_matrix()
        a = simulate_readout(rho, TomographySetting("XZ"), shots=100, seed=5)
        b = simulate_readout(rho, TomographySetting("XZ"), shots=100, seed=5)
        assert a.counts == b.counts

    def test_flip_validation(self):
        rho = StateVector.basis("0").density_matrix()
        with pytest.raises(ValueError):
            exact_readout(rho, TomographySetting("Z"), flip=1.2)


class TestReconstruction:
    def exact_tables(self, rho, n, flip=0.0):
        return [exact_readout(rho, s, flip=flip) for s in tomography_settings(n)]

    def test_exact_reconstruction(self):
        rng = np.random.default_rng(17)
        for _ in range(4):
            rho = random_density(rng, 2)
            est = reconstruct_state(self.exact_tables(rho, 2))
            assert np.abs(est.matrix - rho.matrix).max() < 1e-10

    def test_exact_reconstruction_four_qubits(self):
        rho = run_statevector(build_ground_prep(P11)).density_matrix()
        est = reconstruct_state(self.exact_tables(rho, 4))
        assert trace_distance(est, rho) < 1e-10

    def test_missing_setting_rejected(self):
        rho = StateVector.basis("00").density_matrix()
        tables = self.exact_tables(rho, 2)[:-1]
        with pytest.raises(ValueError):
            reconstruct_state(tables)

    def test_duplicate_setting_rejected(self):
        rho = StateVector.basis("00").density_matrix()
        tables = self.exact_tables(rho, 2)
        tables[0] = tables[1]
        with pytest.raises(ValueError):
            reconstruct_state(tables)

    def test_unequal_shots_rejected(self):
        rho = StateVector.basis("00").density_matrix()
        tables = self.exact_tables(rho, 2)
        odd = simulate_readout(rho, TomographySetting(tables[0].setting),
                               shots=10, seed=0)
        tables[0] = odd
        with pytest.raises(ValueError):
            reconstruct_state(tables)

    def test_output_is_physical_at_finite_shots(self):
        rho = run_statevector(build_ground_prep(P11)).density_matrix()
        tables = [
            simulate_readout(rho, s, shots=256, seed=i)
            for i, s in enumerate(tomography_settings(4))
        ]
        est = reconstruct_state(tables)
        m = est.matrix
        assert np.trace(m).real == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.eigvalsh(m).min() > -1e-9

    def test_sampled_estimate_converges(self):
        rho = StateVector(np.array([0.6, 0.0, 0.0, 0.8])).density_matrix()
        errs = []
        for shots in (256, 4096):
            tables = [
                simulate_readout(rho, s, shots=shots, seed=100 + i)
                for i, s in enumerate(tomography_settings(2))
            ]
            errs.append(trace_distance(reconstruct_state(tables), rho))
        assert errs[1] < errs[0]

    def test_estimator_unbiased_on_full_rank_state(self):
        # on a state whose eigenvalues sit far from zero the PSD clip
        # never engages, so the linear inversion should average out to
        # the truth over many shot seeds
        base = StateVector(np.array([0.5, 0.5, 0.5, 0.5])).density_matrix()
        rho = DensityMatrix(0.4 * base.matrix + 0.6 * np.eye(4) / 4.0)
        n_rounds = 50
        acc = np.zeros((4, 4), complex)
        per_round = []
        for r in range(n_rounds):
            tables = [
                simulate_readout(rho, s, shots=512, seed=1000 * r + i)
                for i, s in enumerate(tomography_settings(2))
            ]
            est = reconstruct_state(tables).matrix
            acc += est
            per_round.append(np.abs(est - rho.matrix).max())
        mean_err = np.abs(acc / n_rounds - rho.matrix).max()
        scatter = np.std(per_round) / np.sqrt(n_rounds)
        assert mean_err < max(3 * scatter, 5e-3)

    def test_pure_state_clip_bias_shrinks_with_shots(self):
        # a pure target does pick up projection bias at low shots; the
        # bias has to fade as the shot count grows
        rho = StateVector(np.array([0.5, 0.5, 0.5, 0.5])).density_matrix()

        def mean_estimate(shots, rounds=20):
            acc = np.zeros((4, 4), complex)
            for r in range(rounds):
                tables = [
                    simulate_readout(rho, s, shots=shots, seed=7000 * r + i)
                    for i, s in enumerate(tomography_settings(2))
                ]
                acc += reconstruct_state(tables).matrix
            return acc / rounds

        low = np.abs(mean_estimate(128) - rho.matrix).max()
        high = np.abs(mean_estimate(4096) - rho.matrix).max()
        assert high < low

    def test_readout_flip_biases_raw_reconstruction(self):
        rho = StateVector.basis("11").density_matrix()
        tables = self.exact_tables(rho, 2, flip=0.05)
        est = reconstruct_state(tables)
        assert trace_distance(est, rho) > 0.01


# ---------------------------------------------------------------------------
# preset equivalences
# ---------------------------------------------------------------------------

class TestPresetEquivalence:
    def test_split_xyz_with_zero_y_matches_split_xz(self):
        prog = build_quench_program(P11, dt=0.1, steps=3)
        a = run_density_matrix(prog, build_noise_model("split_xz", 0.01, 0.016))
        b = run_density_matrix(prog, build_noise_model("split_xyz", 0.01, 0.016,
                                                       fixed={"p_y": 0.0}))
        for da, db in zip(a.states, b.states):
            assert np.abs(da.matrix - db.matrix).max() < 1e-14

    def test_abc_shared_matches_split_on_diagonal(self):
        # shared triple (p, 0, p) for both arities is split_xz at p1 == p2 == p
        prog = build_quench_program(P11, dt=0.1, steps=2)
        a = run_density_matrix(prog, build_noise_model("abc_shared", 0.02, 0.02))
        b = run_density_matrix(prog, build_noise_model("split_xz", 0.02, 0.02))
        for da, db in zip(a.states, b.states):
            assert np.abs(da.matrix - db.matrix).max() < 1e-14
