"""Independent brute-force references used to check the fast implementations.

Everything here enumerates explicitly (all hidden paths, all segmentations,
all alignments) or uses closed-form conjugate formulas, so agreement with
the recursive implementations is meaningful evidence of correctness.
"""

import itertools
import math

import numpy as np
from scipy.special import gammaln


def all_paths(n_states, length):
    """(n^T, T) array of every hidden state path."""
    return np.array(list(itertools.product(range(n_states), repeat=length)),
                    dtype=np.int64)


def enum_hmm_loglik(initial, transition, emission, obs):
    paths = all_paths(len(initial), len(obs))
    prob = initial[paths[:, 0]] * emission[paths[:, 0], obs[0]]
    for t in range(1, len(obs)):
        prob = prob * transition[paths[:, t - 1], paths[:, t]] * emission[paths[:, t], obs[t]]
    return float(np.log(prob.sum()))


def enum_viterbi_logprob(initial, transition, emission, obs):
    """Log joint probability of the single best path."""
    paths = all_paths(len(initial), len(obs))
    prob = initial[paths[:, 0]] * emission[paths[:, 0], obs[0]]
    for t in range(1, len(obs)):
        prob = prob * transition[paths[:, t - 1], paths[:, t]] * emission[paths[:, t], obs[t]]
    return float(np.log(prob.max()))


def path_logprob(initial, transition, emission, obs, path):
    """Log joint probability of one specific path."""
    lp = math.log(initial[path[0]]) + math.log(emission[path[0], obs[0]])
    for t in range(1, len(obs)):
        lp += math.log(transition[path[t - 1], path[t]])
        lp += math.log(emission[path[t], obs[t]])
    return lp


def enum_khmm_loglik(params, obs):
    """Sum over all hidden paths of the order-k chain likelihood."""
    n, k = params.n_states, params.order
    paths = all_paths(n, len(obs))
    prob = params.initial[paths[:, 0]] * params.emission[paths[:, 0], obs[0]]
    for t in range(1, len(obs)):
        if t < k:
            table = params.init_transitions[t - 1]
            idx = np.zeros(len(paths), dtype=np.int64)
            for j in range(t):
                idx = idx * n + paths[:, j]
            prob = prob * table[idx, paths[:, t]]
        else:
            idx = np.zeros(len(paths), dtype=np.int64)
            for j in range(t - k, t):
                idx = idx * n + paths[:, j]
            prob = prob * params.transition[idx, paths[:, t]]
        prob = prob * params.emission[paths[:, t], obs[t]]
    return float(np.log(prob.sum()))


def enum_arhmm_loglik(params, obs):
    paths = all_paths(params.n_states, len(obs))
    prob = params.initial[paths[:, 0]] * params.init_emission[paths[:, 0], obs[0]]
    for t in range(1, len(obs)):
        prob = prob * params.transition[paths[:, t - 1], paths[:, t]]
        prob = prob * params.emission[paths[:, t], obs[t - 1], obs[t]]
    return float(np.log(prob.sum()))


def enum_tshmm_loglik(params, obs):
    m1, m2 = params.m1, params.m2
    paths = all_paths(m1 * m2, len(obs))  # pair index r * m1 + s
    r, s = paths // m1, paths % m1
    prob = params.initial[paths[:, 0]] * params.emission[s[:, 0], obs[0]]
    for t in range(1, len(obs)):
        prob = prob * params.C[r[:, t - 1], r[:, t]]
        prob = prob * params.D[r[:, t], s[:, t - 1], s[:, t]]
        prob = prob * params.emission[s[:, t], obs[t]]
    return float(np.log(prob.sum()))


def enum_fhmm_loglik(params, obs):
    from sscompose.hierarchical import emission_level
    sizes = params.chain_sizes
    T = len(obs)
    total = 0.0
    for joint in itertools.product(*(itertools.product(range(nj), repeat=T)
                                     for nj in sizes)):
        # joint[c][t] = state of chain c at time t
        prob = 1.0
        for c, nj in enumerate(sizes):
            prob *= params.chain_initials[c][joint[c][0]]
            for t in range(1, T):
                prob *= params.chain_transitions[c][joint[c][t - 1], joint[c][t]]
        for t in range(T):
            level = emission_level(np.array([joint[c][t] for c in range(len(sizes))]))
            prob *= params.emission[level - 1, obs[t]]
        total += prob
    return float(np.log(total))


def enum_hsmm_loglik(params, obs):
    """Sum over all (segmentation, state labeling) pairs that cover obs exactly."""
    T = len(obs)
    n, D = params.n_states, params.duration.shape[1]

    def rec(t, prev_state):
        if t == T:
            return 1.0
        total = 0.0
        for j in range(n):
            if prev_state is None:
                entry = params.initial[j]
            else:
                entry = params.transition[prev_state, j]
            if entry == 0.0:
                continue
            for d in range(1, min(D, T - t) + 1):
                emit = np.prod(params.emission[j, obs[t:t + d]])
                total += entry * params.duration[j, d - 1] * emit * rec(t + d, j)
        return total

    return float(np.log(rec(0, None)))


def brute_edit_distance(a, b):
    """Plain recursive Levenshtein with memoization."""
    a, b = list(a), list(b)
    memo = {}

    def rec(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        key = (i, j)
        if key not in memo:
            sub = rec(i + 1, j + 1) + (a[i] != b[j])
            memo[key] = min(sub, rec(i + 1, j) + 1, rec(i, j + 1) + 1)
        return memo[key]

    return rec(0, 0)


def rmse_naive(values, ref):
    total = 0.0
    for v in values:
        total += (v - ref) ** 2
    return math.sqrt(total / len(values))


def rmse_compensated(values, ref):
    return math.sqrt(math.fsum((v - ref) ** 2 for v in values) / len(values))


def batch_conjugate_regression(y, order, prior_scale=1.0, prior_df=1.0,
                               prior_obs_var=1.0):
    """Closed-form normal-inverse-chi-squared posterior and marginal for the
    static AR model y_t = F_t' theta + eps, matching the discount filter at
    state discount = variance discount = 1.

    Returns (m, C, s, n_dof, log_marginal), with C in the filter's
    convention (the Student-t scale matrix, i.e. s_T times the inverse
    posterior precision).
    """
    y = np.asarray(y, dtype=float)
    d = order
    X = np.array([y[t - d:t][::-1] for t in range(d, len(y))])
    t_obs = y[d:]
    T = len(t_obs)
    C0 = np.eye(d) * prior_scale
    C0_inv = np.linalg.inv(C0)
    n0 = prior_df
    s0 = prior_obs_var
    d0 = n0 * s0

    lam = C0_inv + X.T @ X
    C_T = np.linalg.inv(lam)
    m_T = C_T @ (X.T @ t_obs)  # prior mean is zero
    n_T = n0 + T
    d_T = d0 + t_obs @ t_obs - m_T @ lam @ m_T
    s_T = d_T / n_T
    C_T = s_T * C_T

    # marginal: t_obs ~ multivariate Student-t(df=n0, mean=0, scale s0 (I + X C0 X'))
    S = np.eye(T) + X @ C0 @ X.T
    sign, logdet = np.linalg.slogdet(S)
    Q = t_obs @ np.linalg.solve(S, t_obs)
    log_marginal = (gammaln((n0 + T) / 2.0) - gammaln(n0 / 2.0)
                    - 0.5 * T * math.log(n0 * math.pi * s0) - 0.5 * logdet
                    - 0.5 * (n0 + T) * math.log1p(Q / (n0 * s0)))
    return m_T, C_T, s_T, n_T, float(log_marginal)
