"""Hierarchical-state variants: two-hidden-state, factorial and layered HMMs.

The two-hidden-state model runs the first-order forward-backward on the
(R, S) product chain with the composite transition A_{ik,jl} = C_ij D_jkl
and applies the proportional M-step updates for C and D; emission hangs
off S only.  The factorial model does exact EM on the Cartesian-product
chain with the emission row picked by the rounded mean of the 1-based
chain ordinals.  The layered model stacks Baum-Welch fits on successive
Viterbi paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .hmm import (
    SMOOTHING,
    DEFAULT_TOL,
    DEFAULT_MAX_ITER,
    FitReport,
    HmmParams,
    _as_rng,
    _check_obs,
    _converged,
    _draw,
    _pairwise_sum,
    _posteriors,
    _scaled_forward,
    baum_welch,
    log_likelihood,
    random_params,
    sample,
    viterbi,
)

DEFAULT_PRODUCT_CAP = 10_000


# ---------------------------------------------------------------------------
# Two-hidden-state HMM (R drives S, emission from S)


@dataclass
class TshmmParams:
    m1: int                 # states of S
    m2: int                 # states of R
    C: np.ndarray           # (m2, m2): P(R_t = j | R_{t-1} = i)
    D: np.ndarray           # (m2, m1, m1): D[j, k, l] = P(S_t = l | R_t = j, S_{t-1} = k)
    initial: np.ndarray     # (m2 * m1,) over (r, s) pairs, index r * m1 + s
    emission: np.ndarray    # (m1, K), emission from S

    @property
    def n_symbols(self):
        return self.emission.shape[1]

    def composite_transition(self):
        """A[(i,k),(j,l)] = C[i,j] * D[j,k,l]; rows sum to 1 by construction."""
        A = np.einsum("ij,jkl->ikjl", self.C, self.D)
        return A.reshape(self.m2 * self.m1, self.m2 * self.m1)


def random_tshmm_params(m1, m2, alphabet_size, seed):
    rng = _as_rng(seed)
    return TshmmParams(
        m1, m2,
        rng.dirichlet(np.ones(m2), size=m2),
        rng.dirichlet(np.ones(m1), size=(m2, m1)),
        rng.dirichlet(np.ones(m2 * m1)),
        rng.dirichlet(np.ones(alphabet_size), size=m1),
    )


def _tshmm_obs_lik(params, obs):
    per_s = params.emission[:, obs]              # (m1, T)
    return np.tile(per_s.T, (1, params.m2))      # (T, m2*m1)


def tshmm_log_likelihood(params, obs):
    obs = _check_obs(obs, params.n_symbols)
    loglik, _, _ = _scaled_forward(params.initial, params.composite_transition(),
                                   _tshmm_obs_lik(params, obs))
    return loglik


def tshmm_em_step(params, obs):
    """One EM iteration; the C/D updates are the proportional ones the
    composite-chain expected counts imply."""
    obs = _check_obs(obs, params.n_symbols)
    m1, m2 = params.m1, params.m2
    K = params.n_symbols
    A = params.composite_transition()
    obs_lik = _tshmm_obs_lik(params, obs)
    loglik, alpha, beta, scale, gamma = _posteriors(params.initial, A, obs_lik)
    xi_sum = _pairwise_sum(alpha, beta, scale, A, obs_lik)
    xi4 = xi_sum.reshape(m2, m1, m2, m1)  # [i, k, j, l]

    c_acc = xi4.sum(axis=(1, 3)) + SMOOTHING
    d_acc = xi4.sum(axis=0).transpose(1, 0, 2) + SMOOTHING  # -> [j, k, l]
    emis_acc = np.zeros((m1, K))
    gamma_s = gamma.reshape(len(obs), m2, m1).sum(axis=1)
    np.add.at(emis_acc.T, obs, gamma_s)
    emis_acc += SMOOTHING
    new = TshmmParams(
        m1, m2,
        c_acc / c_acc.sum(axis=1, keepdims=True),
        d_acc / d_acc.sum(axis=2, keepdims=True),
        gamma[0],
        emis_acc / emis_acc.sum(axis=1, keepdims=True),
    )
    return new, loglik


def train_tshmm(obs, m1, m2, n_symbols, init=None, seed=None,
                tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                product_cap=DEFAULT_PRODUCT_CAP):
    if m1 < 1 or m2 < 1:
        raise ValueError("state counts must be >= 1")
    if m1 * m2 > product_cap:
        raise ValueError(f"product state space {m1 * m2} exceeds cap {product_cap}")
    obs = _check_obs(obs, n_symbols)
    if init is None:
        init = random_tshmm_params(m1, m2, n_symbols, seed)
    params = init
    report = FitReport(seed=seed if isinstance(seed, int) else None)
    for _ in range(max_iter):
        new, loglik = tshmm_em_step(params, obs)
        report.log_likelihood_trace.append(loglik)
        report.iterations += 1
        if _converged(report.log_likelihood_trace, tol):
            report.converged = True
            break
        params = new
    return params, report


def sample_tshmm(params, length, seed):
    flat = HmmParams(params.initial, params.composite_transition(),
                     np.tile(params.emission, (params.m2, 1)))
    return sample(flat, length, seed)


# ---------------------------------------------------------------------------
# Factorial HMM


@dataclass
class FhmmParams:
    chain_sizes: tuple
    chain_initials: list    # one (n_j,) vector per chain
    chain_transitions: list  # one (n_j, n_j) matrix per chain
    emission: np.ndarray    # (n_levels, K), row = rounded mean ordinal - 1

    @property
    def n_symbols(self):
        return self.emission.shape[1]

    @property
    def n_product(self):
        return int(np.prod(self.chain_sizes))


def emission_level(states):
    """Rounded (half-up) mean of 1-based chain ordinals."""
    states = np.asarray(states)
    mean = (states + 1).mean(axis=-1)
    return np.floor(mean + 0.5).astype(np.int64)


def n_emission_levels(chain_sizes):
    return int(emission_level(np.asarray(chain_sizes) - 1))


def _product_levels(chain_sizes):
    grids = np.indices(chain_sizes).reshape(len(chain_sizes), -1).T  # (P, m)
    return emission_level(grids)  # 1-based levels per product state


def random_fhmm_params(chain_sizes, alphabet_size, seed, product_cap=DEFAULT_PRODUCT_CAP):
    if int(np.prod(chain_sizes)) > product_cap:
        raise ValueError(f"product state space {int(np.prod(chain_sizes))} exceeds cap "
                         f"{product_cap}; structured approximations are out of scope")
    rng = _as_rng(seed)
    return FhmmParams(
        tuple(chain_sizes),
        [rng.dirichlet(np.ones(nj)) for nj in chain_sizes],
        [rng.dirichlet(np.ones(nj), size=nj) for nj in chain_sizes],
        rng.dirichlet(np.ones(alphabet_size), size=n_emission_levels(chain_sizes)),
    )


def _fhmm_flat(params):
    initial = reduce(np.kron, params.chain_initials)
    transition = reduce(np.kron, params.chain_transitions)
    levels = _product_levels(params.chain_sizes)
    emission = params.emission[levels - 1]
    return HmmParams(initial, transition, emission), levels


def fhmm_log_likelihood(params, obs):
    obs = _check_obs(obs, params.n_symbols)
    flat, _ = _fhmm_flat(params)
    return log_likelihood(flat, obs)


def _fhmm_em_step(params, obs):
    sizes = params.chain_sizes
    m = len(sizes)
    K = params.n_symbols
    flat, levels = _fhmm_flat(params)
    obs_lik = flat.emission[:, obs].T
    loglik, alpha, beta, scale, gamma = _posteriors(flat.initial, flat.transition, obs_lik)
    xi_sum = _pairwise_sum(alpha, beta, scale, flat.transition, obs_lik)
    xi_full = xi_sum.reshape(tuple(sizes) + tuple(sizes))

    chain_transitions = []
    chain_initials = []
    g0 = gamma[0].reshape(sizes)
    for j in range(m):
        axes = tuple(a for a in range(2 * m) if a not in (j, m + j))
        acc = xi_full.sum(axis=axes) + SMOOTHING
        chain_transitions.append(acc / acc.sum(axis=1, keepdims=True))
        chain_initials.append(g0.sum(axis=tuple(a for a in range(m) if a != j)))

    n_levels = params.emission.shape[0]
    level_onehot = np.eye(n_levels)[levels - 1]        # (P, n_levels)
    gamma_lvl = gamma @ level_onehot                   # (T, n_levels)
    emis_acc = np.zeros((n_levels, K))
    np.add.at(emis_acc.T, obs, gamma_lvl)
    emis_acc += SMOOTHING
    new = FhmmParams(tuple(sizes), chain_initials, chain_transitions,
                     emis_acc / emis_acc.sum(axis=1, keepdims=True))
    return new, loglik


def train_fhmm(obs, chain_sizes, n_symbols, init=None, seed=None,
               tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
               product_cap=DEFAULT_PRODUCT_CAP):
    """Exact EM on the Cartesian-product chain of independent factors."""
    obs = _check_obs(obs, n_symbols)
    if init is None:
        init = random_fhmm_params(chain_sizes, n_symbols, seed, product_cap)
    if init.n_product > product_cap:
        raise ValueError(f"product state space {init.n_product} exceeds cap {product_cap}; "
                         "structured approximations are out of scope")
    params = init
    report = FitReport(seed=seed if isinstance(seed, int) else None)
    for _ in range(max_iter):
        new, loglik = _fhmm_em_step(params, obs)
        report.log_likelihood_trace.append(loglik)
        report.iterations += 1
        if _converged(report.log_likelihood_trace, tol):
            report.converged = True
            break
        params = new
    return params, report


def sample_fhmm(params, length, seed):
    flat, _ = _fhmm_flat(params)
    return sample(flat, length, seed)


# ---------------------------------------------------------------------------
# Layered HMM


@dataclass
class LhmmParams:
    layers: list            # layers[0] emits pitches; layer l emits layer l-1 states
    layer_reports: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def n_symbols(self):
        return self.layers[0].n_symbols


def train_lhmm(obs, n_states, n_layers, n_symbols, seed=None,
               tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, inits=None):
    """Stacked fit: Baum-Welch, then refit on the Viterbi path, layer by layer."""
    obs = _check_obs(obs, n_symbols)
    if n_layers < 1:
        raise ValueError("need at least one layer")
    rng = _as_rng(seed)
    layers, reports, warnings = [], [], []
    current = obs
    alphabet = n_symbols
    for level in range(n_layers):
        init = inits[level] if inits is not None else random_params(n_states, alphabet, rng)
        fitted, report = baum_welch(init, current, tol=tol, max_iter=max_iter)
        layers.append(fitted)
        reports.append(report)
        if level + 1 < n_layers:
            path = viterbi(fitted, current)
            if len(np.unique(path)) < 2:
                warnings.append(f"layer {level + 1} Viterbi path uses a single state")
            current = path
            alphabet = n_states
    params = LhmmParams(layers, reports, warnings)
    top = FitReport(list(reports[-1].log_likelihood_trace), reports[-1].iterations,
                    reports[-1].converged, seed if isinstance(seed, int) else None)
    return params, top


def lhmm_log_likelihood(params, obs):
    """Log-likelihood of the bottom layer (the pitch-emitting HMM)."""
    return log_likelihood(params.layers[0], obs)


def sample_lhmm(params, length, seed):
    """Top-down ancestral sampling through the layer stack."""
    rng = _as_rng(seed)
    seq = sample(params.layers[-1], length, rng)
    for layer in reversed(params.layers[:-1]):
        cum_emis = np.cumsum(layer.emission, axis=1)
        u = rng.random(length)
        seq = np.array([_draw(cum_emis[s], ui) for s, ui in zip(seq, u)], dtype=np.int64)
    return seq
