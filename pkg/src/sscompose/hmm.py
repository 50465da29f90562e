"""First-order categorical HMM machinery shared by all model variants.

Scaled (normalized-alpha) forward-backward, Baum-Welch with optional
transition masks, Viterbi, ancestral sampling and the random-parameter
baseline.  The private helpers operate on a per-time observation
likelihood matrix so variants with richer emission structure can reuse
the same recursions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SMOOTHING = 1e-10  # added to M-step accumulators to avoid absorbing zero rows
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500


class ZeroProbabilityError(ValueError):
    """The model assigns probability zero to the observed sequence."""


@dataclass
class HmmParams:
    initial: np.ndarray      # (n,)
    transition: np.ndarray   # (n, n), row-stochastic
    emission: np.ndarray     # (n, K), row-stochastic

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=float)
        self.transition = np.asarray(self.transition, dtype=float)
        self.emission = np.asarray(self.emission, dtype=float)

    @property
    def n_states(self):
        return len(self.initial)

    @property
    def n_symbols(self):
        return self.emission.shape[1]

    def validate(self, atol=1e-12):
        if np.any(self.initial < 0) or np.any(self.transition < 0) or np.any(self.emission < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(self.initial.sum() - 1.0) > atol:
            raise ValueError("initial distribution does not sum to 1")
        if np.max(np.abs(self.transition.sum(axis=1) - 1.0)) > atol:
            raise ValueError("transition rows do not sum to 1")
        if np.max(np.abs(self.emission.sum(axis=1) - 1.0)) > atol:
            raise ValueError("emission rows do not sum to 1")


@dataclass
class FitReport:
    log_likelihood_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    seed: int | None = None

    @property
    def final_log_likelihood(self):
        return self.log_likelihood_trace[-1] if self.log_likelihood_trace else None


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_obs(obs, n_symbols):
    obs = np.asarray(obs, dtype=np.int64)
    if obs.ndim != 1 or len(obs) < 1:
        raise ValueError("observation sequence must be a non-empty 1-d array")
    bad = np.flatnonzero((obs < 0) | (obs >= n_symbols))
    if len(bad):
        raise ValueError(f"observation symbol {obs[bad[0]]} at position {bad[0]} "
                         f"is outside the alphabet of size {n_symbols}")
    return obs


def _scaled_forward(initial, transition, obs_lik):
    """Scaled forward pass.  Returns (log_likelihood, alpha, scale)."""
    T, n = obs_lik.shape
    alpha = np.empty((T, n))
    scale = np.empty(T)
    a = initial * obs_lik[0]
    scale[0] = a.sum()
    if scale[0] <= 0.0:
        raise ZeroProbabilityError("sequence has probability zero at step 0")
    alpha[0] = a / scale[0]
    for t in range(1, T):
        a = (alpha[t - 1] @ transition) * obs_lik[t]
        scale[t] = a.sum()
        if scale[t] <= 0.0:
            raise ZeroProbabilityError(f"sequence has probability zero at step {t}")
        alpha[t] = a / scale[t]
    return float(np.log(scale).sum()), alpha, scale


def _scaled_backward(transition, obs_lik, scale):
    T, n = obs_lik.shape
    beta = np.empty((T, n))
    beta[-1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = (transition @ (obs_lik[t + 1] * beta[t + 1])) / scale[t + 1]
    return beta


def _posteriors(initial, transition, obs_lik):
    """Full scaled forward-backward on an observation-likelihood matrix."""
    loglik, alpha, scale = _scaled_forward(initial, transition, obs_lik)
    beta = _scaled_backward(transition, obs_lik, scale)
    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    return loglik, alpha, beta, scale, gamma


def _pairwise_sum(alpha, beta, scale, transition, obs_lik):
    """Sum over t of the pairwise posteriors xi_t, without storing them all."""
    T, n = obs_lik.shape
    acc = np.zeros_like(transition)
    for t in range(T - 1):
        right = obs_lik[t + 1] * beta[t + 1] / scale[t + 1]
        acc += alpha[t][:, None] * transition * right[None, :]
    return acc


def forward_backward(params, obs):
    """E-step quantities: exact log-likelihood, gamma_t(i) and xi_t(i, j)."""
    obs = _check_obs(obs, params.n_symbols)
    obs_lik = params.emission[:, obs].T
    loglik, alpha, beta, scale, gamma = _posteriors(params.initial, params.transition, obs_lik)
    T, n = obs_lik.shape
    xi = np.empty((max(T - 1, 0), n, n))
    for t in range(T - 1):
        right = obs_lik[t + 1] * beta[t + 1] / scale[t + 1]
        xi[t] = alpha[t][:, None] * params.transition * right[None, :]
    return loglik, gamma, xi


def log_likelihood(params, obs):
    obs = _check_obs(obs, params.n_symbols)
    obs_lik = params.emission[:, obs].T
    loglik, _, _ = _scaled_forward(params.initial, params.transition, obs_lik)
    return loglik


def _converged(trace, tol):
    if len(trace) < 2:
        return False
    prev, cur = trace[-2], trace[-1]
    return abs(cur - prev) < tol * max(1.0, abs(prev))


def baum_welch(init, obs, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
               transition_mask=None, seed=None):
    """EM fit from an explicit starting point.

    transition_mask zeroes out (and keeps zero) disallowed transitions;
    the left-right and zero-self-transition variants rely on it.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    obs = _check_obs(obs, init.n_symbols)
    n, K = init.n_states, init.n_symbols
    mask = np.ones((n, n)) if transition_mask is None else np.asarray(transition_mask, dtype=float)
    params = HmmParams(init.initial.copy(), init.transition.copy(), init.emission.copy())
    report = FitReport(seed=seed)
    for _ in range(max_iter):
        obs_lik = params.emission[:, obs].T
        loglik, alpha, beta, scale, gamma = _posteriors(params.initial, params.transition, obs_lik)
        report.log_likelihood_trace.append(loglik)
        report.iterations += 1
        if _converged(report.log_likelihood_trace, tol):
            report.converged = True
            break
        trans_acc = _pairwise_sum(alpha, beta, scale, params.transition, obs_lik)
        trans_acc = trans_acc * mask + SMOOTHING * mask
        emis_acc = np.zeros((n, K))
        np.add.at(emis_acc.T, obs, gamma)
        emis_acc += SMOOTHING
        params = HmmParams(
            gamma[0],
            trans_acc / trans_acc.sum(axis=1, keepdims=True),
            emis_acc / emis_acc.sum(axis=1, keepdims=True),
        )
    return params, report


def viterbi(params, obs):
    """Most likely hidden state path (log-space DP)."""
    obs = _check_obs(obs, params.n_symbols)
    with np.errstate(divide="ignore"):
        log_init = np.log(params.initial)
        log_trans = np.log(params.transition)
        log_emis = np.log(params.emission)
    T, n = len(obs), params.n_states
    delta = log_init + log_emis[:, obs[0]]
    back = np.empty((T, n), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, None] + log_trans
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(n)] + log_emis[:, obs[t]]
    path = np.empty(T, dtype=np.int64)
    path[-1] = int(np.argmax(delta))
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


def _draw(cumulative, u):
    """Inverse-cdf draw from a precomputed cumulative row."""
    return min(int(np.searchsorted(cumulative, u, side="right")), len(cumulative) - 1)


def sample(params, length, seed):
    """Ancestral sampling: z_1 ~ pi, z_t ~ transition row, x_t ~ emission row."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = _as_rng(seed)
    cum_init = np.cumsum(params.initial)
    cum_trans = np.cumsum(params.transition, axis=1)
    cum_emis = np.cumsum(params.emission, axis=1)
    u = rng.random(2 * length)
    obs = np.empty(length, dtype=np.int64)
    z = _draw(cum_init, u[0])
    obs[0] = _draw(cum_emis[z], u[1])
    for t in range(1, length):
        z = _draw(cum_trans[z], u[2 * t])
        obs[t] = _draw(cum_emis[z], u[2 * t + 1])
    return obs


def random_params(n_states, alphabet_size, seed):
    """Flat-Dirichlet random parameters (the random-HMM baseline and EM inits)."""
    if n_states < 1 or alphabet_size < 1:
        raise ValueError("sizes must be >= 1")
    rng = _as_rng(seed)
    return HmmParams(
        rng.dirichlet(np.ones(n_states)),
        rng.dirichlet(np.ones(n_states), size=n_states),
        rng.dirichlet(np.ones(alphabet_size), size=n_states),
    )
