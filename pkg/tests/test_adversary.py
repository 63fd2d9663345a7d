import numpy as np
import pytest

from covertsim import adversary as adv
from covertsim import boolfunc as bf
from covertsim import oracles, qsim


def masked_query_roundtrip(f, n, strategy, rng):
    """One randomness-masked phase query through a tapped oracle."""
    tap = oracles.TapChannel(strategy)
    oracle = oracles.QuantumChannelOracle(f, "QPh", tap=tap)
    r = int(rng.integers(0, 1 << n))
    sent = qsim.apply_z_mask(qsim.uniform_state(n), r, range(n))
    got = oracle.query(sent, list(range(n)), rng=rng)
    return qsim.apply_z_mask(got, r, range(n)), tap


class TestTaps:
    def test_identity_unchanged(self):
        rng = np.random.default_rng(0)
        f = bf.random_truth_table(3, rng)
        out, _ = masked_query_roundtrip(f, 3, adv.identity(), rng)
        assert qsim.states_equal(out, qsim.prepare_phase_state(f), 1e-12)

    def test_unidirectional_query_tap_is_identity(self):
        rng = np.random.default_rng(1)
        psi = qsim.uniform_state(2)
        mem = adv.TapMemory(adv.response_measure_z())
        out = adv.apply_tap(adv.response_measure_z(), "query", psi, [0, 1], mem, rng)
        assert out is psi  # literally untouched

    def test_response_replace_overwrites(self):
        rng = np.random.default_rng(2)
        f = bf.random_truth_table(2, rng)
        repl = qsim.basis_state(2, 0)
        tap = oracles.TapChannel(adv.response_replace(repl))
        oracle = oracles.QuantumChannelOracle(f, "QPh", tap=tap)
        out = oracle.query(qsim.uniform_state(2), [0, 1], rng=rng)
        assert qsim.states_equal(out, repl, 1e-12)

    def test_replace_register_in_larger_state(self):
        # replacing an entangled register decouples it from the rest
        rng = np.random.default_rng(3)
        bell = qsim.apply_gate(
            qsim.apply_gate(qsim.basis_state(2), "H", [0]), "CNOT", [0, 1]
        )
        repl = qsim.basis_state(1, 1)
        out = adv._replace_register(bell, [1], repl, rng)
        assert qsim.schmidt_rank(out, [1]) == 1
        red = qsim.partial_trace(out, [1])
        assert np.allclose(red.mat, np.diag([0, 1.0]), atol=1e-12)

    def test_depolarize_p1_register_maximally_mixed(self):
        rng = np.random.default_rng(4)
        f = bf.random_truth_table(2, rng)
        # average many trajectories of the p=1 depolarizing response
        acc = np.zeros((4, 4), dtype=complex)
        trials = 2000
        for i in range(trials):
            r = np.random.default_rng(1000 + i)
            out, _ = masked_query_roundtrip(f, 2, adv.response_depolarize(1.0), r)
            acc += np.outer(out.vec, out.vec.conj())
        assert np.abs(acc / trials - np.eye(4) / 4).max() < 0.05

    def test_measure_z_records_outcome(self):
        rng = np.random.default_rng(5)
        f = bf.random_truth_table(2, rng)
        _, tap = masked_query_roundtrip(f, 2, adv.response_measure_z(), rng)
        assert len(tap.memory.records) == 1
        assert tap.memory.records[0][0] == "z_outcome"


class TestAncillaFree:
    def test_delta_zero_is_identity(self):
        rng = np.random.default_rng(6)
        psi = qsim.uniform_state(3)
        strat = adv.ancilla_free_iid(0.0)
        mem = adv.TapMemory(strat)
        out = adv.apply_tap(strat, "query", psi, [0, 1, 2], mem, rng)
        out = adv.apply_tap(strat, "response", out, [0, 1, 2], mem, rng)
        assert np.allclose(out.vec, psi.vec)
        assert mem.records == []

    def test_pre_measurement_halves_schmidt_rank(self):
        # entangled-mode query: R entangled with Q; measuring one Q qubit in
        # the Hadamard basis caps the Schmidt rank at 2^{n-1}
        rng = np.random.default_rng(7)
        for n in (2, 3, 4):
            state = qsim.tensor(qsim.uniform_state(n), qsim.uniform_state(n))
            for i in range(n):
                state = qsim.apply_gate(state, "CZ", [i, n + i])
            q_reg = list(range(n, 2 * n))
            assert qsim.schmidt_rank(state, q_reg) == 1 << n
            strat = adv.ancilla_free_iid(1.0, extract_post=False)
            mem = adv.TapMemory(strat)
            post = adv.apply_tap(strat, "query", state, q_reg, mem, rng)
            assert qsim.schmidt_rank(post, q_reg) <= 1 << (n - 1)
            # rank stays bounded through the oracle and local post-processing
            f = bf.random_truth_table(n, rng)
            after = qsim.apply_phase_oracle(post, f, q_reg)
            assert qsim.schmidt_rank(after, q_reg) <= 1 << (n - 1)
            local = qsim.apply_hadamards(after, q_reg)
            assert qsim.schmidt_rank(local, q_reg) <= 1 << (n - 1)

    def test_no_quantum_memory_fault(self):
        strat = adv.ancilla_free_iid(1.0)
        mem = adv.TapMemory(strat)
        with pytest.raises(RuntimeError):
            mem.store_quantum(qsim.basis_state(1))

    def test_strategy_invariants(self):
        with pytest.raises(ValueError):
            adv.AdversaryStrategy("ancilla_free_iid", adv.BIDIRECTIONAL, "quantum")
        with pytest.raises(ValueError):
            adv.AdversaryStrategy("swap_attack", adv.UNIDIRECTIONAL, "quantum")


class TestSwapAttack:
    def test_learns_parity_and_learner_sees_nothing(self):
        rng = np.random.default_rng(8)
        n = 4
        for _ in range(20):
            s = int(rng.integers(0, 1 << n))
            f = bf.parity_fn(s, n)
            tap = oracles.TapChannel(adv.swap_attack())
            oracle = oracles.QuantumChannelOracle(f, "QPh", tap=tap)
            r = int(rng.integers(0, 1 << n))
            sent = qsim.apply_z_mask(qsim.uniform_state(n), r, range(n))
            got = oracle.query(sent, list(range(n)), rng=rng)
            unmasked = qsim.apply_z_mask(got, r, range(n))
            # adversary learned s exactly
            assert tap.memory.records[0] == ("learned_parity", s)
            # learner's view is bit-identical to a no-adversary run
            assert qsim.states_equal(unmasked, qsim.prepare_phase_state(f), 1e-12)
            # subsequent queries pass through (oracle already learned)
            got2 = oracle.query(sent, list(range(n)), rng=rng)
            assert qsim.states_equal(
                qsim.apply_z_mask(got2, r, range(n)), qsim.prepare_phase_state(f), 1e-12
            )

    def test_needs_bidirectional(self):
        with pytest.raises(ValueError):
            adv.AdversaryStrategy("swap_attack", adv.UNIDIRECTIONAL, "quantum")

    def test_cannot_steal_entangled_register(self):
        rng = np.random.default_rng(9)
        bell = qsim.apply_gate(
            qsim.apply_gate(qsim.basis_state(2), "H", [0]), "CNOT", [0, 1]
        )
        strat = adv.swap_attack()
        mem = adv.TapMemory(strat)
        with pytest.raises(RuntimeError):
            adv.apply_tap(strat, "query", bell, [1], mem, rng)


class TestExactViews:
    def test_identity_view_factorizes_under_masking(self):
        # mask-averaged response register is I/2^n for every f
        n = 3
        views = []
        for fbits in range(4):
            f = bf.truth_table([(fbits >> (x % 2)) & 1 for x in range(8)])
            avg = np.zeros((8, 8), dtype=complex)
            for r in range(8):
                masked = qsim.apply_z_mask(qsim.uniform_state(n), r, range(n))
                resp = qsim.apply_phase_oracle(masked, f, range(n))
                avg += np.outer(resp.vec, resp.vec.conj()) / 8
            views.append(
                adv.exact_response_view(adv.identity(), qsim.MixedState(n, avg))
            )
        assert adv.factorization_distance(views) < 1e-12

    def test_measure_z_view_is_diagonal(self):
        rho = qsim.uniform_state(2).density()
        view = adv.exact_response_view(adv.response_measure_z(), rho)
        assert np.allclose(view.mat, np.eye(4) / 4)

    def test_depolarize_view(self):
        rho = qsim.basis_state(2, 3).density()
        view = adv.exact_response_view(adv.response_depolarize(0.4), rho)
        expect = 0.6 * rho.mat + 0.4 * np.eye(4) / 4
        assert np.allclose(view.mat, expect)

    def test_factorization_distance_detects_leak(self):
        # views that depend on f must have nonzero distance
        views = [
            qsim.basis_state(1, 0).density(),
            qsim.basis_state(1, 1).density(),
        ]
        assert adv.factorization_distance(views) == pytest.approx(0.5)


class TestSwapAttackInformation:
    def test_mutual_information_equals_prior_entropy(self):
        # the swap attacker's record determines F exactly, so I(F; record)
        # equals the prior entropy (exact classical computation)
        import math

        from covertsim import oracles, acquire

        n = 3
        rng = np.random.default_rng(40)
        joint_counts = {}
        for s in range(1 << n):
            f = bf.parity_fn(s, n)
            tap = oracles.TapChannel(adv.swap_attack())
            oracle = oracles.QuantumChannelOracle(f, "QPh", tap=tap)
            acquire.masked_query_phase_randomness(oracle, n, rng)
            rec = [r[1] for r in tap.memory.records if r[0] == "learned_parity"][0]
            joint_counts[(s, rec)] = joint_counts.get((s, rec), 0) + 1
        # uniform prior over 2^n parities; record = s with probability 1
        total = sum(joint_counts.values())
        p_joint = {k: v / total for k, v in joint_counts.items()}
        h_prior = n  # bits
        mi = 0.0
        for (s, rec), p in p_joint.items():
            p_s = 1 / (1 << n)
            p_rec = sum(v for (s2, r2), v in p_joint.items() if r2 == rec)
            mi += p * math.log2(p / (p_s * p_rec))
        assert mi == pytest.approx(h_prior, abs=1e-9)
