"""Higher-order, left-right and autoregressive HMM variants.

The order-k chain is realized exactly by embedding state tuples
(z_{t-k+1}, ..., z_t) into a first-order chain of n^k tuple states; the
first embedded step emits the first k observations jointly so the
likelihood and EM updates are exact.  Left-right structure is a zero
mask on the transition tables that multiplicative EM updates preserve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hmm import (
    SMOOTHING,
    DEFAULT_TOL,
    DEFAULT_MAX_ITER,
    FitReport,
    HmmParams,
    ZeroProbabilityError,
    _as_rng,
    _check_obs,
    _converged,
    _draw,
    _pairwise_sum,
    _posteriors,
    _scaled_forward,
    baum_welch,
)

DEFAULT_STATE_CAP = 10_000


# ---------------------------------------------------------------------------
# k-HMM


@dataclass
class KhmmParams:
    order: int
    n_states: int
    initial: np.ndarray               # (n,)
    init_transitions: list            # step i in 2..k: (n^(i-1), n)
    transition: np.ndarray            # (n^k, n): p(z_t | previous k states)
    emission: np.ndarray              # (n, K)

    @property
    def n_symbols(self):
        return self.emission.shape[1]

    @property
    def n_tuples(self):
        return self.n_states ** self.order


def _lr_tuple_mask(n, rows):
    """Allowed next states given the last state of each row's prefix tuple."""
    last = np.arange(rows) % n
    return (np.arange(n)[None, :] >= last[:, None]).astype(float)


def _masked_dirichlet(rng, mask):
    rows = rng.dirichlet(np.ones(mask.shape[1]), size=mask.shape[0]) * mask
    return rows / rows.sum(axis=1, keepdims=True)


def random_khmm_params(n_states, order, alphabet_size, seed, left_right=False,
                       state_cap=DEFAULT_STATE_CAP):
    if n_states ** order > state_cap:
        raise ValueError(f"tuple state space {n_states}**{order} exceeds cap {state_cap}; "
                         "reduce the number of states or the order")
    rng = _as_rng(seed)
    initial = rng.dirichlet(np.ones(n_states))
    init_transitions = []
    for i in range(2, order + 1):
        rows = n_states ** (i - 1)
        mask = _lr_tuple_mask(n_states, rows) if left_right else np.ones((rows, n_states))
        init_transitions.append(_masked_dirichlet(rng, mask))
    rows = n_states ** order
    mask = _lr_tuple_mask(n_states, rows) if left_right else np.ones((rows, n_states))
    transition = _masked_dirichlet(rng, mask)
    emission = rng.dirichlet(np.ones(alphabet_size), size=n_states)
    return KhmmParams(order, n_states, initial, init_transitions, transition, emission)


def _tuple_initial(params):
    """Distribution over length-k tuples implied by pi and the init transitions."""
    w = params.initial
    for table in params.init_transitions:
        w = (w[:, None] * table).ravel()
    return w


def _khmm_obs_lik(params, obs):
    """Embedded observation likelihoods: row 0 emits x_1..x_k jointly."""
    n, k = params.n_states, params.order
    P = params.n_tuples
    T = len(obs)
    first = params.emission[:, obs[0]]
    for i in range(1, k):
        first = (first[:, None] * params.emission[:, obs[i]][None, :]).ravel()
    last_coord = np.arange(P) % n
    rows = np.empty((T - k + 1, P))
    rows[0] = first
    for tau in range(1, T - k + 1):
        rows[tau] = params.emission[last_coord, obs[k + tau - 1]]
    return rows


def _khmm_forward_backward(params, obs_lik):
    """Scaled forward-backward on the sparse tuple-shift transition structure."""
    n = params.n_states
    P = params.n_tuples
    T = obs_lik.shape[0]
    shift = (np.arange(P) % (P // n))[:, None] * n + np.arange(n)[None, :]
    rho = _tuple_initial(params)
    alpha = np.empty((T, P))
    scale = np.empty(T)
    a = rho * obs_lik[0]
    scale[0] = a.sum()
    if scale[0] <= 0.0:
        raise ZeroProbabilityError("sequence has probability zero at step 0")
    alpha[0] = a / scale[0]
    for t in range(1, T):
        a = np.zeros(P)
        np.add.at(a, shift, alpha[t - 1][:, None] * params.transition)
        a *= obs_lik[t]
        scale[t] = a.sum()
        if scale[t] <= 0.0:
            raise ZeroProbabilityError(f"sequence has probability zero at step {t}")
        alpha[t] = a / scale[t]
    beta = np.empty((T, P))
    beta[-1] = 1.0
    for t in range(T - 2, -1, -1):
        right = (obs_lik[t + 1] * beta[t + 1]) / scale[t + 1]
        beta[t] = (params.transition * right[shift]).sum(axis=1)
    loglik = float(np.log(scale).sum())
    return loglik, alpha, beta, scale, shift


def khmm_log_likelihood(params, obs):
    obs = _check_obs(obs, params.n_symbols)
    if len(obs) < params.order:
        raise ValueError("sequence shorter than the model order")
    loglik, *_ = _khmm_forward_backward(params, _khmm_obs_lik(params, obs))
    return loglik


def _khmm_em_step(params, obs, masks):
    """One exact EM iteration; returns (new_params, log_likelihood)."""
    n, k = params.n_states, params.order
    K = params.n_symbols
    obs_lik = _khmm_obs_lik(params, obs)
    loglik, alpha, beta, scale, shift = _khmm_forward_backward(params, obs_lik)
    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    T_emb = obs_lik.shape[0]

    # transition tensor counts (sparse aggregation over the shift structure)
    trans_acc = np.zeros_like(params.transition)
    for t in range(T_emb - 1):
        right = (obs_lik[t + 1] * beta[t + 1]) / scale[t + 1]
        trans_acc += alpha[t][:, None] * params.transition * right[shift]
    trans_acc = trans_acc * masks[-1] + SMOOTHING * masks[-1]
    transition = trans_acc / trans_acc.sum(axis=1, keepdims=True)

    # initial distributions from the first tuple posterior
    g0 = gamma[0].reshape((n,) * k)
    initial = g0.reshape(n, -1).sum(axis=1) if k > 1 else g0.copy()
    init_transitions = []
    for i in range(2, k + 1):
        joint = g0.reshape((n ** i, -1)).sum(axis=1).reshape(n ** (i - 1), n)
        joint = joint * masks[i - 2] + SMOOTHING * masks[i - 2]
        init_transitions.append(joint / joint.sum(axis=1, keepdims=True))

    # emission counts: first tuple covers x_1..x_k, later rows the last coordinate
    emis_acc = np.zeros((n, K))
    for i in range(k):
        axes = tuple(a for a in range(k) if a != i)
        marg = g0.sum(axis=axes) if axes else g0
        emis_acc[:, obs[i]] += marg
    if T_emb > 1:
        last_marg = gamma[1:].reshape(T_emb - 1, -1, n).sum(axis=1)
        np.add.at(emis_acc.T, obs[k:], last_marg)
    emis_acc += SMOOTHING
    emission = emis_acc / emis_acc.sum(axis=1, keepdims=True)

    new = KhmmParams(k, n, initial, init_transitions, transition, emission)
    return new, loglik


def train_khmm(obs, n_states, order, n_symbols, init=None, seed=None,
               tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, left_right=False,
               state_cap=DEFAULT_STATE_CAP):
    """EM on the order-k chain via the exact tuple embedding."""
    obs = _check_obs(obs, n_symbols)
    if len(obs) <= order:
        raise ValueError("sequence must be longer than the model order")
    if init is None:
        init = random_khmm_params(n_states, order, n_symbols, seed, left_right, state_cap)
    if init.n_tuples > state_cap:
        raise ValueError(f"tuple state space {init.n_tuples} exceeds cap {state_cap}; "
                         "reduce the number of states or the order")
    masks = []
    for i in range(2, order + 1):
        rows = n_states ** (i - 1)
        masks.append(_lr_tuple_mask(n_states, rows) if left_right else np.ones((rows, n_states)))
    rows = n_states ** order
    masks.append(_lr_tuple_mask(n_states, rows) if left_right else np.ones((rows, n_states)))
    params = init
    report = FitReport(seed=seed if isinstance(seed, int) else None)
    for _ in range(max_iter):
        new, loglik = _khmm_em_step(params, obs, masks)
        report.log_likelihood_trace.append(loglik)
        report.iterations += 1
        if _converged(report.log_likelihood_trace, tol):
            report.converged = True
            break
        params = new
    return params, report


def sample_khmm(params, length, seed):
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = _as_rng(seed)
    n, k = params.n_states, params.order
    cum_init = np.cumsum(params.initial)
    cum_inits = [np.cumsum(t, axis=1) for t in params.init_transitions]
    cum_trans = np.cumsum(params.transition, axis=1)
    cum_emis = np.cumsum(params.emission, axis=1)
    states = []
    obs = np.empty(length, dtype=np.int64)
    z = _draw(cum_init, rng.random())
    states.append(z)
    obs[0] = _draw(cum_emis[z], rng.random())
    prefix = z
    for i in range(1, min(k, length)):
        z = _draw(cum_inits[i - 1][prefix], rng.random())
        states.append(z)
        obs[i] = _draw(cum_emis[z], rng.random())
        prefix = prefix * n + z
    tup = prefix
    P = params.n_tuples
    for t in range(k, length):
        z = _draw(cum_trans[tup], rng.random())
        obs[t] = _draw(cum_emis[z], rng.random())
        tup = (tup % (P // n)) * n + z
    return obs


# ---------------------------------------------------------------------------
# Left-right HMM (first order; higher orders go through train_khmm)


def lr_transition_mask(n_states):
    return np.triu(np.ones((n_states, n_states)))


def random_lr_params(n_states, alphabet_size, seed):
    rng = _as_rng(seed)
    mask = lr_transition_mask(n_states)
    return HmmParams(
        rng.dirichlet(np.ones(n_states)),
        _masked_dirichlet(rng, mask),
        rng.dirichlet(np.ones(alphabet_size), size=n_states),
    )


def train_lrhmm(obs, n_states, n_symbols, order=1, init=None, seed=None,
                tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, state_cap=DEFAULT_STATE_CAP):
    """Upper-triangular-constrained fit; order > 1 uses the tuple embedding."""
    if order > 1:
        return train_khmm(obs, n_states, order, n_symbols, init=init, seed=seed,
                          tol=tol, max_iter=max_iter, left_right=True, state_cap=state_cap)
    if init is None:
        init = random_lr_params(n_states, n_symbols, seed)
    return baum_welch(init, obs, tol=tol, max_iter=max_iter,
                      transition_mask=lr_transition_mask(n_states),
                      seed=seed if isinstance(seed, int) else None)


# ---------------------------------------------------------------------------
# Autoregressive HMM


@dataclass
class ArhmmParams:
    initial: np.ndarray        # (n,)
    transition: np.ndarray     # (n, n)
    emission: np.ndarray       # (n, K, K): p(x_t | z_t, x_{t-1})
    init_emission: np.ndarray  # (n, K): p(x_1 | z_1)

    @property
    def n_states(self):
        return len(self.initial)

    @property
    def n_symbols(self):
        return self.init_emission.shape[1]


def random_arhmm_params(n_states, alphabet_size, seed):
    rng = _as_rng(seed)
    return ArhmmParams(
        rng.dirichlet(np.ones(n_states)),
        rng.dirichlet(np.ones(n_states), size=n_states),
        rng.dirichlet(np.ones(alphabet_size), size=(n_states, alphabet_size)),
        rng.dirichlet(np.ones(alphabet_size), size=n_states),
    )


def _arhmm_obs_lik(params, obs):
    T, n = len(obs), params.n_states
    rows = np.empty((T, n))
    rows[0] = params.init_emission[:, obs[0]]
    if T > 1:
        rows[1:] = params.emission[:, obs[:-1], obs[1:]].T
    return rows


def arhmm_log_likelihood(params, obs):
    obs = _check_obs(obs, params.n_symbols)
    loglik, _, _ = _scaled_forward(params.initial, params.transition,
                                   _arhmm_obs_lik(params, obs))
    return loglik


def train_arhmm(obs, n_states, n_symbols, init=None, seed=None,
                tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """EM where emissions condition on the realized previous symbol."""
    obs = _check_obs(obs, n_symbols)
    if len(obs) < 2:
        raise ValueError("ARHMM needs at least 2 observations")
    if init is None:
        init = random_arhmm_params(n_states, n_symbols, seed)
    params = init
    n, K = n_states, n_symbols
    report = FitReport(seed=seed if isinstance(seed, int) else None)
    for _ in range(max_iter):
        obs_lik = _arhmm_obs_lik(params, obs)
        loglik, alpha, beta, scale, gamma = _posteriors(params.initial, params.transition, obs_lik)
        report.log_likelihood_trace.append(loglik)
        report.iterations += 1
        if _converged(report.log_likelihood_trace, tol):
            report.converged = True
            break
        trans_acc = _pairwise_sum(alpha, beta, scale, params.transition, obs_lik) + SMOOTHING
        emis_acc = np.zeros((n, K, K))
        np.add.at(emis_acc.transpose(1, 2, 0), (obs[:-1], obs[1:]), gamma[1:])
        emis_acc += SMOOTHING
        init_emis_acc = np.full((n, K), SMOOTHING)
        init_emis_acc[:, obs[0]] += gamma[0]
        params = ArhmmParams(
            gamma[0],
            trans_acc / trans_acc.sum(axis=1, keepdims=True),
            emis_acc / emis_acc.sum(axis=2, keepdims=True),
            init_emis_acc / init_emis_acc.sum(axis=1, keepdims=True),
        )
    return params, report


def sample_arhmm(params, length, seed):
    """Ancestral sampling threading the previous emitted symbol."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = _as_rng(seed)
    cum_init = np.cumsum(params.initial)
    cum_trans = np.cumsum(params.transition, axis=1)
    cum_emis = np.cumsum(params.emission, axis=2)
    cum_init_emis = np.cumsum(params.init_emission, axis=1)
    obs = np.empty(length, dtype=np.int64)
    z = _draw(cum_init, rng.random())
    obs[0] = _draw(cum_init_emis[z], rng.random())
    for t in range(1, length):
        z = _draw(cum_trans[z], rng.random())
        obs[t] = _draw(cum_emis[z, obs[t - 1]], rng.random())
    return obs
