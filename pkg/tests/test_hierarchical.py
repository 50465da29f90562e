import numpy as np
import pytest

from oracles import enum_fhmm_loglik, enum_tshmm_loglik
from sscompose import hierarchical, hmm


def _matched_tshmm_init(init):
    """TshmmParams with m2 = 1 reproducing an HmmParams starting point."""
    n = init.n_states
    return hierarchical.TshmmParams(
        n, 1, np.ones((1, 1)), init.transition.copy()[None, :, :],
        init.initial.copy(), init.emission.copy())


def test_tshmm_m2_1_reduces_to_baum_welch():
    rng = np.random.default_rng(0)
    obs = rng.integers(0, 4, 150)
    init = hmm.random_params(3, 4, rng)
    _, ref = hmm.baum_welch(init, obs, max_iter=25)
    _, got = hierarchical.train_tshmm(obs, 3, 1, 4, init=_matched_tshmm_init(init),
                                      max_iter=25)
    assert np.allclose(got.log_likelihood_trace, ref.log_likelihood_trace, atol=1e-9)


def test_tshmm_matches_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(10):
        params = hierarchical.random_tshmm_params(2, 2, 3, rng)
        obs = rng.integers(0, 3, 6)
        got = hierarchical.tshmm_log_likelihood(params, obs)
        assert got == pytest.approx(enum_tshmm_loglik(params, obs), rel=1e-10)


def test_tshmm_em_monotone():
    rng = np.random.default_rng(2)
    obs = rng.integers(0, 3, 120)
    _, report = hierarchical.train_tshmm(obs, 3, 2, 3, seed=4, max_iter=25)
    assert np.diff(report.log_likelihood_trace).min() >= -1e-8


def test_tshmm_constraints_after_each_step():
    rng = np.random.default_rng(3)
    obs = rng.integers(0, 3, 80)
    params = hierarchical.random_tshmm_params(3, 2, 3, rng)
    for _ in range(8):
        params, _ = hierarchical.tshmm_em_step(params, obs)
        assert np.abs(params.C.sum(axis=1) - 1.0).max() < 1e-12
        assert np.abs(params.D.sum(axis=2) - 1.0).max() < 1e-12
        composite = params.composite_transition()
        assert np.abs(composite.sum(axis=1) - 1.0).max() < 1e-12


def test_tshmm_product_cap():
    with pytest.raises(ValueError, match="cap"):
        hierarchical.train_tshmm([0, 1], 200, 200, 2, seed=0)


def test_tshmm_sample_deterministic():
    params = hierarchical.random_tshmm_params(3, 2, 4, 0)
    assert np.array_equal(hierarchical.sample_tshmm(params, 30, seed=1),
                          hierarchical.sample_tshmm(params, 30, seed=1))


def _matched_fhmm_init(init):
    return hierarchical.FhmmParams((init.n_states,), [init.initial.copy()],
                                   [init.transition.copy()], init.emission.copy())


def test_fhmm_single_chain_reduces_to_baum_welch():
    rng = np.random.default_rng(4)
    obs = rng.integers(0, 4, 150)
    init = hmm.random_params(3, 4, rng)
    _, ref = hmm.baum_welch(init, obs, max_iter=25)
    _, got = hierarchical.train_fhmm(obs, (3,), 4, init=_matched_fhmm_init(init),
                                     max_iter=25)
    assert np.allclose(got.log_likelihood_trace, ref.log_likelihood_trace, atol=1e-9)


def test_fhmm_matches_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(8):
        params = hierarchical.random_fhmm_params((2, 2), 3, rng)
        obs = rng.integers(0, 3, 5)
        got = hierarchical.fhmm_log_likelihood(params, obs)
        assert got == pytest.approx(enum_fhmm_loglik(params, obs), rel=1e-10)


def test_fhmm_em_monotone():
    rng = np.random.default_rng(6)
    obs = rng.integers(0, 3, 120)
    _, report = hierarchical.train_fhmm(obs, (3, 2), 3, seed=2, max_iter=25)
    assert np.diff(report.log_likelihood_trace).min() >= -1e-8


def test_fhmm_emission_level_rule():
    # 1-based ordinals (3, 7, 2) have mean 4, so level 4
    assert hierarchical.emission_level(np.array([2, 6, 1])) == 4
    # round-half-up: ordinals (1, 2) have mean 1.5 -> level 2
    assert hierarchical.emission_level(np.array([0, 1])) == 2


def test_fhmm_cap_error_mentions_scope():
    with pytest.raises(ValueError, match="structured approximations"):
        hierarchical.random_fhmm_params((30, 30, 30), 3, 0)


def test_fhmm_sample_deterministic():
    params = hierarchical.random_fhmm_params((2, 3), 4, 0)
    assert np.array_equal(hierarchical.sample_fhmm(params, 30, seed=6),
                          hierarchical.sample_fhmm(params, 30, seed=6))


def test_lhmm_single_layer_reduces_to_baum_welch():
    rng = np.random.default_rng(7)
    obs = rng.integers(0, 4, 150)
    init = hmm.random_params(3, 4, rng)
    _, ref = hmm.baum_welch(init, obs, max_iter=25)
    params, got = hierarchical.train_lhmm(obs, 3, 1, 4, inits=[init], max_iter=25)
    assert np.allclose(got.log_likelihood_trace, ref.log_likelihood_trace, atol=1e-9)
    assert len(params.layers) == 1


def test_lhmm_layer_observations_are_viterbi_paths():
    rng = np.random.default_rng(8)
    obs = rng.integers(0, 4, 120)
    inits = [hmm.random_params(5, 4, 10), hmm.random_params(5, 5, 11)]
    params, _ = hierarchical.train_lhmm(obs, 5, 2, 4, inits=inits, max_iter=15)
    path = hmm.viterbi(params.layers[0], obs)
    refit, _ = hmm.baum_welch(inits[1], path, max_iter=15)
    assert np.allclose(params.layers[1].transition, refit.transition, atol=1e-12)
    assert np.allclose(params.layers[1].emission, refit.emission, atol=1e-12)


def test_lhmm_three_layers_structure():
    rng = np.random.default_rng(9)
    obs = rng.integers(0, 5, 200)
    params, _ = hierarchical.train_lhmm(obs, 25, 3, 5, seed=1, max_iter=3)
    assert len(params.layers) == 3
    assert params.layers[0].n_symbols == 5
    assert params.layers[1].n_symbols == 25
    assert params.layers[2].n_symbols == 25


def test_lhmm_degenerate_path_warning():
    obs = np.zeros(40, dtype=np.int64)  # single-symbol piece
    found = False
    for seed in range(6):
        params, _ = hierarchical.train_lhmm(obs, 2, 2, 1, seed=seed, max_iter=10)
        if params.warnings:
            found = True
            break
    assert found


def test_lhmm_sample_deterministic():
    rng = np.random.default_rng(10)
    obs = rng.integers(0, 3, 100)
    params, _ = hierarchical.train_lhmm(obs, 3, 2, 3, seed=2, max_iter=5)
    assert np.array_equal(hierarchical.sample_lhmm(params, 40, seed=3),
                          hierarchical.sample_lhmm(params, 40, seed=3))


def test_lhmm_needs_a_layer():
    with pytest.raises(ValueError):
        hierarchical.train_lhmm([0, 1], 2, 0, 2, seed=0)
