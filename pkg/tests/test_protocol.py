import numpy as np
import pytest

import lossbench as lb
from support import enumerate_average, enumerate_average_naive, random_density, random_povm


def fig1_style_config(**overrides):
    """Basis loss alpha=0.99 on level 1, imperfect detector, Pauli gates."""
    defaults = dict(
        gateset=lb.pauli_gateset(),
        noise=lb.basis_loss_channel(lb.LossModelSpec(alpha=0.99, level=1, dim=2)),
        rho0=lb.basis_state(2, 0),
        q_op=lb.detector_model(lb.DetectorSpec(eigenvalues=(0.87, 0.95), basis_seed=7)),
        m_grid=(1, 2, 3),
        n_sequences=5,
        master_seed=0,
    )
    defaults.update(overrides)
    return lb.ProtocolConfig(**defaults)


class TestProtocolConfig:
    def test_m_grid_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            fig1_style_config(m_grid=(3, 2))
        with pytest.raises(ValueError, match="strictly increasing"):
            fig1_style_config(m_grid=(0, 1))
        with pytest.raises(ValueError, match="nonempty"):
            fig1_style_config(m_grid=())

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            fig1_style_config(rho0=lb.maximally_mixed(3))

    def test_counts_validated(self):
        with pytest.raises(ValueError, match="n_sequences"):
            fig1_style_config(n_sequences=0)
        with pytest.raises(ValueError, match="shots"):
            fig1_style_config(shots=0)
        with pytest.raises(ValueError, match="variant"):
            fig1_style_config(variant="other")

    def test_fingerprint_tracks_config(self):
        a = fig1_style_config()
        assert a.fingerprint() == fig1_style_config().fingerprint()
        assert a.fingerprint() != fig1_style_config(master_seed=1).fingerprint()
        assert a.fingerprint() != fig1_style_config(variant="rb").fingerprint()


class TestSampleSequence:
    def test_indices_in_range_and_deterministic(self):
        g = lb.pauli_gateset()
        a = lb.sample_sequence(g, 50, lb.stream(3))
        b = lb.sample_sequence(g, 50, lb.stream(3))
        assert np.array_equal(a, b)
        assert a.min() >= 0 and a.max() < 4

    def test_short_length_raises(self):
        with pytest.raises(ValueError, match="length"):
            lb.sample_sequence(lb.pauli_gateset(), 0, lb.stream(0))


class TestExecuteSequence:
    def test_noiseless_matches_direct_composition(self):
        identity = lb.QuantumChannel(2, (np.eye(2),))
        cfg = fig1_style_config(noise=identity)
        indices = [1, 3, 2, 0, 1]
        out = lb.execute_sequence(cfg, indices)
        u = lb.compose_sequence(cfg.gateset, indices)
        rho = lb.DensityMatrix(2, u @ cfg.rho0.matrix @ u.conj().T)
        assert out.value == pytest.approx(lb.expectation(cfg.q_op, rho), abs=1e-14)
        assert out.m == 5
        assert out.shots_used is None

    def test_rb_variant_with_identity_noise_returns_to_start(self):
        identity = lb.QuantumChannel(2, (np.eye(2),))
        q = lb.MeasurementOperator(2, np.diag([1.0, 0.0]))
        cfg = fig1_style_config(
            noise=identity, q_op=q, variant="rb", gateset=lb.clifford_gateset()
        )
        for seed in range(5):
            indices = lb.sample_sequence(cfg.gateset, 7, lb.stream(seed))
            out = lb.execute_sequence(cfg, indices)
            assert out.value == pytest.approx(1.0, abs=1e-12)

    def test_repeated_identity_gate_decays_by_survival_power(self):
        # all-identity sequence on |1><1| with alpha=0.99: 0.9801 per step
        cfg = fig1_style_config(
            rho0=lb.basis_state(2, 1),
            q_op=lb.MeasurementOperator(2, np.eye(2)),
        )
        for m in (1, 4, 9):
            out = lb.execute_sequence(cfg, [0] * m)
            assert out.value == pytest.approx(0.9801**m, abs=1e-12)

    def test_shot_mode_needs_rng(self):
        cfg = fig1_style_config(shots=10)
        with pytest.raises(ValueError, match="RNG"):
            lb.execute_sequence(cfg, [0])

    def test_shot_mode_is_click_fraction(self):
        cfg = fig1_style_config(shots=1000)
        a = lb.execute_sequence(cfg, [1, 2], lb.stream(8))
        b = lb.execute_sequence(cfg, [1, 2], lb.stream(8))
        assert a.value == b.value
        assert a.shots_used == 1000
        assert 0.0 <= a.value <= 1.0
        assert a.value * 1000 == round(a.value * 1000)

    def test_bad_index_raises(self):
        with pytest.raises(IndexError, match="out of range"):
            lb.execute_sequence(fig1_style_config(), [7])


class TestRunProtocol:
    def test_reproducible_and_worker_invariant(self):
        cfg = fig1_style_config(m_grid=(1, 3, 6), n_sequences=8, shots=50)
        serial = lb.run_protocol(cfg)
        again = lb.run_protocol(cfg)
        pooled = lb.run_protocol(cfg, n_workers=4)
        assert np.array_equal(serial.means, again.means)
        assert np.array_equal(serial.means, pooled.means)
        assert np.array_equal(serial.sems, pooled.sems)

    def test_single_sequence_has_nan_sem(self):
        ds = lb.run_protocol(fig1_style_config(n_sequences=1))
        assert np.all(np.isnan(ds.sems))
        assert np.all(np.isfinite(ds.means))

    def test_metadata_is_deterministic(self):
        cfg = fig1_style_config()
        ds = lb.run_protocol(cfg)
        assert ds.metadata["config_fingerprint"] == cfg.fingerprint()
        assert ds.metadata["master_seed"] == 0
        assert ds.metadata["m_grid"] == [1, 2, 3]
        assert ds.metadata["gateset_labels"] == ["I", "X", "Y", "Z"]
        assert lb.run_protocol(cfg).metadata == ds.metadata

    def test_keep_raw_records_every_sequence(self):
        cfg = fig1_style_config(m_grid=(2, 4), n_sequences=3)
        ds = lb.run_protocol(cfg, keep_raw=True)
        assert len(ds.raw) == 6
        assert [o.m for o in ds.raw] == [2, 2, 2, 4, 4, 4]
        values = np.array([o.value for o in ds.raw[:3]])
        assert ds.means[0] == pytest.approx(values.mean())

    def test_sample_mean_converges_to_exact_average(self):
        # RMS deviation from the exact sequence average shrinks ~ 1/sqrt(n)
        cfg0 = fig1_style_config(m_grid=tuple(range(1, 9)), master_seed=5)
        exact = np.array(
            [lb.exact_sequence_average(cfg0, m) for m in cfg0.m_grid]
        )
        devs = []
        for n in (30, 300, 3000):
            cfg = fig1_style_config(
                m_grid=cfg0.m_grid, master_seed=5, n_sequences=n
            )
            ds = lb.run_protocol(cfg)
            devs.append(float(np.sqrt(np.mean((ds.means - exact) ** 2))))
        root10 = np.sqrt(10.0)
        for wide, narrow in zip(devs, devs[1:]):
            assert root10 / 2 < wide / narrow < 2 * root10

    def test_shot_noise_consistent_with_exact_average(self):
        cfg = fig1_style_config(m_grid=(3,), n_sequences=8, shots=200_000, master_seed=2)
        ds = lb.run_protocol(cfg)
        exact = lb.exact_sequence_average(cfg, 3)
        assert abs(ds.means[0] - exact) < 5 * ds.sems[0]


class TestExactSequenceAverage:
    def test_matches_closed_form_for_1_design(self):
        cfg = fig1_style_config()
        d_q = lb.average_response(cfg.q_op)
        s_rho = lb.state_survival(cfg.noise, cfg.rho0)
        s_avg = lb.average_survival(cfg.noise)
        for m in (1, 10, 50, 100):
            expected = d_q * s_rho * s_avg ** (m - 1)
            assert lb.exact_sequence_average(cfg, m) == pytest.approx(
                expected, abs=1e-12
            )

    def test_maximally_mixed_start_gains_one_survival_factor(self):
        cfg = fig1_style_config(rho0=lb.maximally_mixed(2))
        for m in (1, 5, 20):
            assert lb.exact_sequence_average(cfg, m) == pytest.approx(
                0.91 * 0.99005**m, abs=1e-12
            )

    def test_matches_closed_form_for_random_channels(self):
        for seed in range(3):
            cfg = fig1_style_config(
                noise=lb.random_lossy_channel(2, 0.4, seed),
                rho0=random_density(2, seed + 50),
                q_op=random_povm(2, seed + 90),
            )
            d_q = lb.average_response(cfg.q_op)
            s_rho = lb.state_survival(cfg.noise, cfg.rho0)
            s_avg = lb.average_survival(cfg.noise)
            tr = cfg.rho0.trace
            for m in (1, 7, 40, 100):
                expected = d_q * s_rho * tr * s_avg ** (m - 1)
                assert lb.exact_sequence_average(cfg, m) == pytest.approx(
                    expected, abs=1e-12
                )

    def test_matches_brute_force_enumeration(self):
        cfg = fig1_style_config(
            noise=lb.random_lossy_channel(2, 0.3, 5),
            rho0=random_density(2, 6),
            q_op=random_povm(2, 8),
        )
        for m in (1, 2, 3):
            brute = enumerate_average(cfg.gateset, cfg.noise, cfg.rho0, cfg.q_op, m)
            naive = enumerate_average_naive(cfg.gateset, cfg.noise, cfg.rho0, cfg.q_op, m)
            assert brute == pytest.approx(naive, abs=1e-13)
            assert lb.exact_sequence_average(cfg, m) == pytest.approx(brute, abs=1e-12)

    def test_short_length_raises(self):
        with pytest.raises(ValueError, match="length"):
            lb.exact_sequence_average(fig1_style_config(), 0)


class TestCsvRoundTrip:
    def test_round_trip_is_exact(self, tmp_path):
        ds = lb.run_protocol(fig1_style_config(m_grid=(1, 5, 9), n_sequences=4))
        path = tmp_path / "decay.csv"
        ds.to_csv(path)
        back = lb.read_decay_csv(path)
        assert back.m_values == ds.m_values
        assert np.array_equal(back.means, ds.means)
        assert np.array_equal(back.sems, ds.sems)
        assert back.n_sequences == 4
        assert back.shots is None

    def test_shot_count_round_trips(self, tmp_path):
        ds = lb.run_protocol(fig1_style_config(shots=25))
        path = tmp_path / "decay.csv"
        ds.to_csv(path)
        assert lb.read_decay_csv(path).shots == 25

    def test_header_line(self, tmp_path):
        ds = lb.run_protocol(fig1_style_config())
        path = tmp_path / "decay.csv"
        ds.to_csv(path)
        assert path.read_text().splitlines()[0] == "m,mean,sem,n_sequences,shots"

    def test_bad_header_raises(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("m,avg,sem,n_sequences,shots\n1,0.5,0.1,3,exact\n")
        with pytest.raises(ValueError, match="bad header"):
            lb.read_decay_csv(path)

    def test_inconsistent_rows_raise(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "m,mean,sem,n_sequences,shots\n1,0.5,0.1,3,exact\n2,0.4,0.1,4,exact\n"
        )
        with pytest.raises(ValueError, match="inconsistent"):
            lb.read_decay_csv(path)

    def test_unparseable_field_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("m,mean,sem,n_sequences,shots\n1,half,0.1,3,exact\n")
        with pytest.raises(ValueError, match="bad.csv:2"):
            lb.read_decay_csv(path)

    def test_empty_file_raises(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="empty"):
            lb.read_decay_csv(path)

    def test_no_data_rows_raises(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("m,mean,sem,n_sequences,shots\n")
        with pytest.raises(ValueError, match="no data rows"):
            lb.read_decay_csv(path)
