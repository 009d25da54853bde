import numpy as np
import pytest

from ltvlqr.dynamics import Dynamics, build_environment
from ltvlqr.estimation import ConfidenceEllipsoid
from ltvlqr.ofu import (OfuConfig, generate_candidates, run_algorithm,
                        run_baseline, run_r_ofu, run_sw_ofu, select_optimistic)
from ltvlqr.riccati import backward_recursion, optimal_cost


def scalar(a, b):
    return Dynamics.from_matrices([[a]], [[b]])


def unit_ellipsoid(center=None, dim=(3, 2), radius=1.0):
    center = Dynamics(np.zeros(dim)) if center is None else center
    return ConfidenceEllipsoid(center=center, shaping=np.eye(dim[0]), radius=radius)


def scalar_env(a=0.5, b=0.3, H=10, K=1, noise=0.0, law="ball"):
    sched = np.stack([scalar(a, b).matrix] * H)
    return build_environment("custom", H=H, K=K, noise_scale=noise,
                             schedule=sched, initial_state_law=law)


class TestGenerateCandidates:
    def test_single_candidate_is_center(self):
        ell = unit_ellipsoid()
        cfg = OfuConfig(num_candidates=1)
        cands = generate_candidates(ell, cfg, np.random.default_rng(0))
        assert len(cands) == 1
        assert cands[0] is ell.center

    def test_zero_perturbation_copies_center(self):
        ell = unit_ellipsoid(center=Dynamics(np.ones((3, 2))), radius=5.0)
        cfg = OfuConfig(num_candidates=5, perturb_scale=0.0)
        cands = generate_candidates(ell, cfg, np.random.default_rng(0))
        assert len(cands) == 5
        for c in cands:
            assert np.array_equal(c.matrix, ell.center.matrix)

    def test_all_candidates_feasible(self):
        rng = np.random.default_rng(1)
        shaping = rng.normal(size=(3, 3))
        shaping = shaping @ shaping.T + np.eye(3)
        ell = ConfidenceEllipsoid(center=Dynamics(rng.normal(size=(3, 2))),
                                  shaping=shaping, radius=0.3)
        cfg = OfuConfig(num_candidates=50, perturb_scale=0.5)
        cands = generate_candidates(ell, cfg, rng)
        assert len(cands) == 50
        assert sum(ell.membership(c) for c in cands) == 50

    def test_deterministic_given_rng_seed(self):
        ell = unit_ellipsoid(radius=0.4)
        cfg = OfuConfig(num_candidates=8, perturb_scale=0.5)
        a = generate_candidates(ell, cfg, np.random.default_rng(5))
        b = generate_candidates(ell, cfg, np.random.default_rng(5))
        for ca, cb in zip(a, b):
            assert np.array_equal(ca.matrix, cb.matrix)


class TestSelectOptimistic:
    def test_single_candidate(self):
        th = scalar(0.5, 1.0)
        choice = select_optimistic([th], np.eye(1), np.eye(1), 10, np.ones(1), 0.1)
        assert choice.theta is th
        assert choice.index == 0
        sol = backward_recursion([th] * 10, np.eye(1), np.eye(1), 10)
        assert choice.cost == pytest.approx(optimal_cost(sol, np.ones(1), 0.1),
                                            rel=1e-10)
        assert np.allclose(choice.gain, sol.K_seq[0], rtol=1e-10)

    def test_prefers_cheaper_dynamics(self):
        tame = scalar(0.2, 1.0)
        wild = scalar(0.9, 1.0)
        choice = select_optimistic([wild, tame], np.eye(1), np.eye(1), 20,
                                   np.ones(1), 0.0)
        assert choice.index == 1
        assert choice.theta is tame

    def test_tie_break_lowest_index(self):
        th = scalar(0.5, 0.5)
        dup = Dynamics(th.matrix.copy())
        choice = select_optimistic([th, dup], np.eye(1), np.eye(1), 5, np.ones(1), 0.0)
        assert choice.index == 0

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            select_optimistic([], np.eye(1), np.eye(1), 5, np.ones(1), 0.0)

    def test_broken_candidates_skipped(self):
        good = scalar(0.4, 1.0)
        bad = scalar(np.nan, 1.0)
        choice = select_optimistic([bad, good], np.eye(1), np.eye(1), 5,
                                   np.ones(1), 0.0)
        assert choice.index == 1

    def test_all_broken_flags_cost(self):
        bad = scalar(np.nan, 1.0)
        choice = select_optimistic([bad, bad], np.eye(1), np.eye(1), 5,
                                   np.ones(1), 0.0)
        assert choice.index == 0
        assert choice.cost == np.inf
        assert np.array_equal(choice.gain, np.zeros((1, 1)))


class TestOfuRuns:
    def test_fixed_seed_reproducible(self):
        env = build_environment("switching", H=12, K=2, noise_scale=0.1)
        cfg = OfuConfig(num_candidates=6, epoch_length=4, window=4)
        a = run_r_ofu(env, cfg, 7)
        b = run_r_ofu(env, cfg, 7)
        for field in ("states", "inputs", "costs", "chosen", "radii", "logdets"):
            assert np.array_equal(getattr(a, field), getattr(b, field))
        c = run_r_ofu(env, cfg, 8)
        assert not np.array_equal(a.costs, c.costs)

    def test_certainty_equivalence_limit(self):
        # noiseless scalar system: candidate jitter excites the input channel,
        # the noiseless radius collapses to sqrt(lam), and the projected
        # candidates pin the applied gain to the true-model gain
        env = scalar_env(H=20, noise=0.0)
        cfg = OfuConfig(num_candidates=8, perturb_scale=0.5, epoch_length=20,
                        window=20, lam=1e-12)
        rec = run_r_ofu(env, cfg, 3)
        truth = scalar(0.5, 0.3)
        for h in range(10, 21):
            span = 20 - h + 1
            sol = backward_recursion([truth] * span, env.Q, env.R, span)
            applied = rec.inputs[0, h - 1, 0]
            expected = (sol.K_seq[0] @ rec.states[0, h - 1])[0]
            assert applied == pytest.approx(expected, abs=1e-6)

    def test_epoch_covering_episode_equals_longer_epochs(self):
        env = build_environment("switching", H=10, K=2, noise_scale=0.1)
        base = OfuConfig(num_candidates=4, epoch_length=10)
        longer = OfuConfig(num_candidates=4, epoch_length=50)
        a = run_r_ofu(env, base, 1)
        b = run_r_ofu(env, longer, 1)
        assert np.array_equal(a.inputs, b.inputs)

    def test_sliding_without_eviction_matches_restart_actions(self):
        # one episode, no restarts after h=1 and a window that never evicts:
        # the two loops differ only in the (unused, unprojected) radius term
        env = build_environment("lti", H=8, K=1, noise_scale=0.05)
        cfg = OfuConfig(num_candidates=5, perturb_scale=0.1, epoch_length=8,
                        window=7, lam=1.0)
        r = run_r_ofu(env, cfg, 11)
        s = run_sw_ofu(env, cfg, 11)
        assert np.array_equal(r.inputs, s.inputs)
        assert np.array_equal(r.costs, s.costs)
        assert (s.radii > r.radii).all()

    def test_optimism_against_center(self):
        env = build_environment("switching", H=10, K=2, noise_scale=0.1)
        cfg = OfuConfig(num_candidates=10, epoch_length=5, window=5)
        for rec in (run_r_ofu(env, cfg, 2), run_sw_ofu(env, cfg, 2)):
            assert (rec.opt_costs <= rec.center_costs + 1e-9).all()

    def test_episode_cost_is_step_sum(self):
        env = build_environment("frequent", H=20, K=3, noise_scale=0.1, seed=4)
        cfg = OfuConfig(num_candidates=5, epoch_length=20, window=20)
        rec = run_sw_ofu(env, cfg, 0)
        assert np.allclose(rec.episode_costs, rec.costs.sum(axis=1), rtol=1e-9)

    def test_slice_episodes(self):
        env = build_environment("lti", H=6, K=5, noise_scale=0.1)
        rec = run_baseline(env, "zero_control", 0)
        part = rec.slice_episodes(2, 4)
        assert list(part.episodes) == [2, 3, 4]
        assert np.array_equal(part.costs, rec.costs[1:4])
        with pytest.raises(ValueError):
            rec.slice_episodes(0, 3)
        with pytest.raises(ValueError):
            rec.slice_episodes(4, 6)


class TestBaselines:
    def test_zero_control_logs_zero_inputs(self):
        env = build_environment("switching", H=10, K=2, noise_scale=0.1)
        rec = run_baseline(env, "zero_control", 5)
        assert np.array_equal(rec.inputs, np.zeros_like(rec.inputs))
        assert rec.algo == "zero"

    def test_omniscient_equals_oracle_on_lti(self):
        env = build_environment("lti", H=15, K=2, noise_scale=0.1)
        om = run_baseline(env, "omniscient", 3)
        oracle = run_baseline(env, "oracle_lqr", 3)
        assert np.array_equal(om.inputs, oracle.inputs)
        assert np.array_equal(om.states, oracle.states)

    def test_oracle_suffers_after_switch(self):
        env = build_environment("switching", H=100, K=1, noise_scale=0.1)
        oracle_late, omni_late = [], []
        for seed in range(6):
            oracle_late.append(run_baseline(env, "oracle_lqr", seed).costs[0, 50:].mean())
            omni_late.append(run_baseline(env, "omniscient", seed).costs[0, 50:].mean())
        assert np.mean(oracle_late) > np.mean(omni_late)

    def test_noise_stream_shared_across_algorithms(self):
        # identical seed means identical initial states and disturbances, so a
        # do-nothing run and an optimistic run see the same first state
        env = build_environment("lti", H=6, K=3, noise_scale=0.1)
        cfg = OfuConfig(num_candidates=3, epoch_length=6, window=6)
        zero = run_baseline(env, "zero_control", 9)
        ofu = run_r_ofu(env, cfg, 9)
        assert np.array_equal(zero.states[:, 0], ofu.states[:, 0])

    def test_unknown_baseline(self):
        env = build_environment("lti", H=6, K=1)
        with pytest.raises(ValueError):
            run_baseline(env, "mystery", 0)


class TestDispatch:
    def test_labels(self):
        env = build_environment("lti", H=6, K=1, noise_scale=0.0)
        cfg = OfuConfig(num_candidates=2, epoch_length=3, window=3)
        for label in ("r-ofu", "sw-ofu", "oracle-lqr", "zero", "omniscient"):
            rec = run_algorithm(label, env, cfg, 0)
            assert rec.algo == label
        with pytest.raises(ValueError):
            run_algorithm("greedy", env, cfg, 0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OfuConfig(num_candidates=0)
        with pytest.raises(ValueError):
            OfuConfig(perturb_scale=-0.1)
        with pytest.raises(ValueError):
            OfuConfig(epoch_length=0)
        with pytest.raises(ValueError):
            OfuConfig(window=0)
        with pytest.raises(ValueError):
            OfuConfig(lam=0.0)
        with pytest.raises(ValueError):
            OfuConfig(delta=1.0)
