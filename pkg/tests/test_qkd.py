import csv
import io
import json
import math

import numpy as np
import pytest

from oracles import binary_entropy
from qinfo.qkd import (
    AdversaryModel,
    Bb84Config,
    ConfigError,
    amplified_length,
    bb84_entangled_run,
    bb84_run,
    chsh_test,
    estimate_qber,
    hash_matrix,
    privacy_amplify,
    reconcile_parity,
    session_report_json,
    sessions_to_csv,
    sift,
)
from qinfo.rng import Rng


class TestAdversaryParsing:
    @pytest.mark.parametrize("text", ["none", "intercept-zx", "intercept-fixed:z", "intercept-fixed:x", "depolarize:0.2"])
    def test_roundtrip(self, text):
        assert str(AdversaryModel.parse(text)) == text

    @pytest.mark.parametrize("text", ["eve", "intercept-fixed:y", "depolarize:1.5", "depolarize:x"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            AdversaryModel.parse(text)


class TestConfig:
    def test_check_bits_required(self):
        with pytest.raises(ConfigError):
            Bb84Config(2, check_fraction=0.25)

    @pytest.mark.parametrize("kw", [{"check_fraction": 0}, {"check_fraction": 1}, {"qber_abort_threshold": 0},
                                    {"recon_rounds": -1}, {"seed": -1}, {"num_qubits_sent": 0}])
    def test_invalid(self, kw):
        args = {"num_qubits_sent": 100, **kw}
        with pytest.raises(ConfigError):
            Bb84Config(**args)

    def test_string_adversary(self):
        assert Bb84Config(100, adversary="intercept-zx").adversary.kind == "intercept-zx"


class TestSift:
    def test_all_equal(self):
        a, b, idx = sift([0, 1, 0], [0, 1, 0], [1, 0, 1], [1, 0, 0])
        assert list(idx) == [0, 1, 2] and list(a) == [1, 0, 1] and list(b) == [1, 0, 0]

    def test_all_different(self):
        a, b, idx = sift([0, 1], [1, 0], [1, 1], [0, 0])
        assert a.size == b.size == idx.size == 0

    def test_mixed(self):
        _, _, idx = sift([0, 1, 0, 1], [0, 0, 0, 1], [1, 1, 1, 1], [1, 1, 1, 1])
        assert list(idx) == [0, 2, 3]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            sift([0], [0, 1], [0], [0])


class TestQber:
    def test_identical(self):
        q, ra, rb = estimate_qber([1, 0, 1, 1], [1, 0, 1, 1], [0, 2])
        assert q == 0.0 and list(ra) == [0, 1] and list(rb) == [0, 1]

    def test_complementary(self):
        assert estimate_qber([1, 0, 1], [0, 1, 0], [0, 1, 2])[0] == 1.0

    def test_three_of_twelve(self):
        a = np.zeros(20, dtype=np.uint8)
        b = a.copy()
        b[[1, 4, 7]] = 1
        q, ra, _ = estimate_qber(a, b, list(range(12)))
        assert q == 0.25 and ra.size == 8

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            estimate_qber([0, 1], [0, 1], [2])


class TestReconciliation:
    def test_identical_one_round(self, rng):
        key = rng.bits(1000)
        res = reconcile_parity(key, key, rng, rounds=1)
        assert res.residual_mismatch == 0
        assert res.corrected_alice.size == 500
        assert res.bits_disclosed == 500

    def test_single_error_pair_discarded(self, rng):
        res = reconcile_parity([0, 1], [0, 0], rng, rounds=1)
        assert res.corrected_alice.size == 0 and res.residual_mismatch == 0

    def test_equal_parity_keeps_first(self, rng):
        res = reconcile_parity([1, 1], [0, 0], rng, rounds=1)
        # both bits wrong: the parity check cannot see it
        assert res.corrected_alice.size == 1 and res.residual_mismatch == 1

    def test_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            reconcile_parity([0, 1], [0], rng)

    def test_ten_percent_errors(self):
        residual = []
        for seed in range(100):
            r = Rng(seed)
            a = r.bits(2**12)
            b = a ^ (r.random(2**12) < 0.10).astype(np.uint8)
            res = reconcile_parity(a, b, r.child(1), rounds=4)
            residual.append(res.residual_mismatch / max(res.corrected_alice.size, 1))
        assert max(residual) < 0.01


class TestPrivacyAmplification:
    def test_identity_hook(self, rng):
        key = rng.bits(64)
        assert np.array_equal(privacy_amplify(key, 64, matrix=np.eye(64, dtype=np.uint8)), key)

    def test_equal_in_equal_out(self, rng):
        key = rng.bits(200)
        for seed in range(10):
            assert np.array_equal(privacy_amplify(key, 50, Rng(seed)), privacy_amplify(key.copy(), 50, Rng(seed)))

    def test_balance(self):
        key = np.zeros(128, dtype=np.uint8)
        key[[3, 50, 77]] = 1
        outs = np.array([privacy_amplify(key, 16, Rng(seed)) for seed in range(1000)])
        assert np.all(np.abs(outs.mean(axis=0) - 0.5) <= 0.05)

    def test_gf2_product(self, rng):
        key = rng.bits(30)
        m = hash_matrix(10, 30, Rng(5))
        expected = [sum(int(m[i, j]) & int(key[j]) for j in range(30)) % 2 for i in range(10)]
        assert list(privacy_amplify(key, 10, Rng(5))) == expected

    def test_too_long(self, rng):
        with pytest.raises(ValueError):
            privacy_amplify([0, 1], 3, rng)

    @pytest.mark.parametrize("n,q", [(1000, 0.0), (1000, 0.05), (1000, 0.11), (1000, 0.3)])
    def test_length_rule(self, n, q):
        assert amplified_length(n, q) == max(0, math.floor(n * (1 - 2 * binary_entropy(q))))


class TestBb84:
    def test_clean_channel(self):
        s = bb84_run(Bb84Config(10_000, seed=11))
        assert s.qber_estimate == 0.0
        assert abs(s.sift_fraction - 0.5) <= 0.02
        assert s.completed and s.keys_match
        assert np.array_equal(s.raw_key_alice, s.raw_key_bob)
        assert np.array_equal(s.sifted_alice, s.sifted_bob)
        assert s.sifted_alice.size == s.sifted_bob.size <= 10_000

    def test_clean_never_aborts(self):
        for seed in range(20):
            s = bb84_run(Bb84Config(500, seed=seed))
            assert s.qber_estimate == 0.0 and s.completed

    def test_intercept_resend(self):
        s = bb84_run(Bb84Config(100_000, adversary="intercept-zx", seed=2))
        assert abs(s.qber_estimate - 0.25) <= 0.01
        assert s.verdict == "aborted" and s.final_key is None
        # Eve picked the other basis for about half of the qubits
        assert abs(np.mean(s.eve_bases != s.alice_bases) - 0.5) <= 0.01
        assert abs(s.adversary_agreement - 0.75) <= 0.02

    def test_intercept_fixed(self):
        s = bb84_run(Bb84Config(50_000, adversary="intercept-fixed:x", seed=2))
        assert abs(s.qber_estimate - 0.25) <= 0.02

    def test_zero_depolarizing_equals_clean(self):
        a = bb84_run(Bb84Config(5000, seed=9))
        b = bb84_run(Bb84Config(5000, seed=9, adversary="depolarize:0"))
        for field in ("alice_bits", "bob_bits", "sifted_alice", "check_indices", "final_key_alice"):
            assert np.array_equal(getattr(a, field), getattr(b, field))
        assert a.qber_estimate == b.qber_estimate

    def test_depolarizing_rate(self):
        s = bb84_run(Bb84Config(100_000, seed=4, adversary="depolarize:0.2", qber_abort_threshold=0.2))
        assert abs(s.qber_estimate - 0.10) <= 0.01

    def test_determinism(self):
        cfg = Bb84Config(3000, seed=17, adversary="depolarize:0.1", qber_abort_threshold=0.3)
        a, b = bb84_run(cfg), bb84_run(cfg)
        assert session_report_json(a) == session_report_json(b)
        assert a.transcript.to_jsonl() == b.transcript.to_jsonl()
        assert np.array_equal(a.final_key_alice, b.final_key_alice)

    def test_abort_rate_low_threshold(self):
        aborted = sum(bb84_run(Bb84Config(2000, adversary="intercept-zx", seed=s, qber_abort_threshold=0.15)).verdict
                      == "aborted" for s in range(50))
        assert aborted == 50

    def test_report_schema(self):
        rep = json.loads(session_report_json(bb84_run(Bb84Config(1000, seed=1))))
        for key in ("config", "qber", "sift_fraction", "verdict", "key_length_raw", "key_length_final",
                    "adversary_agreement"):
            assert key in rep
        assert rep["config"]["adversary"] == "none"

    def test_csv(self):
        sessions = [bb84_run(Bb84Config(1000, seed=s)) for s in range(3)]
        rows = list(csv.DictReader(io.StringIO(sessions_to_csv(sessions))))
        assert [int(r["seed"]) for r in rows] == [0, 1, 2]
        assert all(r["verdict"] == "completed" for r in rows)

    def test_transcript_order(self):
        s = bb84_run(Bb84Config(1000, seed=1))
        kinds = s.transcript.kinds()
        assert kinds.index("prepare") < kinds.index("channel") < kinds.index("measure") < kinds.index("sift")
        assert kinds.index("qber") < kinds.index("reconcile") < kinds.index("amplify")


class TestEntangled:
    def test_clean(self):
        s = bb84_entangled_run(Bb84Config(10_000, seed=5))
        assert s.qber_estimate == 0.0 and s.completed and s.keys_match
        assert s.anticorrelation == 1.0
        assert abs(s.sift_fraction - 0.5) <= 0.02

    def test_intercept(self):
        s = bb84_entangled_run(Bb84Config(50_000, seed=5, adversary="intercept-zx"))
        assert abs(s.qber_estimate - 0.25) <= 0.02

    def test_chsh(self, rng):
        res = chsh_test(10_000, rng)
        assert res.s_value > 2.0
        assert abs(res.s_value - 2 * math.sqrt(2)) <= 0.1

    def test_chsh_broken_by_intercept(self, rng):
        res = chsh_test(20_000, rng, AdversaryModel.parse("intercept-zx"))
        assert res.s_value <= 2.0 + 0.1

    def test_session_chsh(self):
        s = bb84_entangled_run(Bb84Config(2000, seed=5, chsh_pairs=10_000))
        assert s.chsh_value > 2.0
