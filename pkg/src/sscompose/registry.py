"""Named model configurations (M1..M15) and the train/sample dispatch.

Each entry pairs a model kind with its default hyperparameters.  Training
takes a pitch sequence, builds the piece's alphabet, fits the model and
returns a TrainedModel; sampling produces a new pitch array of the
requested length from the fitted parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hierarchical, hmm, semimarkov, tvar, variants
from .midi_codec import PitchSequence, build_alphabet

DEFAULT_STATES = 25
DEFAULT_D_MAX = 20


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    description: str
    options: dict = field(default_factory=dict)


REGISTRY = {
    "M1": ModelSpec("M1", "hmm", "first-order HMM, 25 states",
                    {"states": 25}),
    "M2": ModelSpec("M2", "khmm", "second-order HMM, 25 states",
                    {"states": 25, "order": 2}),
    "M3": ModelSpec("M3", "khmm", "third-order HMM, 10 states",
                    {"states": 10, "order": 3}),
    "M4": ModelSpec("M4", "lrhmm", "left-right HMM, 25 states",
                    {"states": 25, "order": 1}),
    "M5": ModelSpec("M5", "lrhmm", "second-order left-right HMM, 25 states",
                    {"states": 25, "order": 2}),
    "M6": ModelSpec("M6", "lrhmm", "third-order left-right HMM, 10 states",
                    {"states": 10, "order": 3}),
    "M7": ModelSpec("M7", "arhmm", "autoregressive-emission HMM, 25 states",
                    {"states": 25}),
    "M8": ModelSpec("M8", "hsmm", "explicit-duration semi-Markov HMM, 25 states",
                    {"states": 25, "d_max": DEFAULT_D_MAX}),
    "M9": ModelSpec("M9", "nshmm", "duration-dependent stay-probability HMM, 25 states",
                    {"states": 25, "d_max": DEFAULT_D_MAX}),
    "M10": ModelSpec("M10", "tshmm", "two-hidden-state HMM, 10 emitting x 5 driving",
                     {"m1": 10, "m2": 5}),
    "M11": ModelSpec("M11", "tshmm", "two-hidden-state HMM, 5 emitting x 10 driving",
                     {"m1": 5, "m2": 10}),
    "M12": ModelSpec("M12", "fhmm", "factorial HMM with chains of 15, 10 and 5 states",
                     {"chains": (15, 10, 5)}),
    "M13": ModelSpec("M13", "lhmm", "layered HMM, 3 layers of 25 states",
                     {"states": 25, "layers": 3}),
    "M14": ModelSpec("M14", "tvar", "time-varying AR with discount grid search",
                     {}),
    "M15": ModelSpec("M15", "random", "untrained random-parameter HMM, 25 states",
                     {"states": 25}),
}


@dataclass
class TrainedModel:
    spec: ModelSpec
    alphabet: object            # PitchAlphabet
    params: object              # kind-specific parameter object
    report: object | None      # FitReport or None
    training_symbols: np.ndarray
    seed: int | None
    extra: dict = field(default_factory=dict)

    @property
    def kind(self):
        return self.spec.kind


def _merged_options(spec, overrides):
    opts = dict(spec.options)
    for key, value in overrides.items():
        if value is not None:
            opts[key] = value
    return opts


def train_model(name, sequence, seed=None, tol=hmm.DEFAULT_TOL,
                max_iter=hmm.DEFAULT_MAX_ITER, **overrides):
    """Fit the named model to a PitchSequence (or a raw pitch array)."""
    if name not in REGISTRY:
        raise ValueError(f"unknown model {name!r}; valid names: {sorted(REGISTRY)}")
    spec = REGISTRY[name]
    if not isinstance(sequence, PitchSequence):
        pitches = np.asarray(sequence, dtype=np.int64)
        sequence = PitchSequence(pitches, np.arange(len(pitches), dtype=np.int64))
    alphabet = build_alphabet(sequence)
    obs = alphabet.to_indices(sequence.pitches)
    K = alphabet.size
    opts = _merged_options(spec, overrides)
    kind = spec.kind
    extra = {}

    if kind == "hmm":
        init = hmm.random_params(opts["states"], K, seed)
        params, report = hmm.baum_welch(init, obs, tol=tol, max_iter=max_iter, seed=seed)
    elif kind == "khmm":
        params, report = variants.train_khmm(obs, opts["states"], opts["order"], K,
                                             seed=seed, tol=tol, max_iter=max_iter)
    elif kind == "lrhmm":
        params, report = variants.train_lrhmm(obs, opts["states"], K, order=opts["order"],
                                              seed=seed, tol=tol, max_iter=max_iter)
    elif kind == "arhmm":
        params, report = variants.train_arhmm(obs, opts["states"], K,
                                              seed=seed, tol=tol, max_iter=max_iter)
    elif kind == "hsmm":
        params, report = semimarkov.train_hsmm(obs, opts["states"], K, opts["d_max"],
                                               seed=seed, tol=tol, max_iter=max_iter)
    elif kind == "nshmm":
        params, info = semimarkov.train_nshmm(obs, opts["states"], K, opts["d_max"],
                                              seed=seed)
        report = None
        extra["sampler"] = info
    elif kind == "tshmm":
        params, report = hierarchical.train_tshmm(obs, opts["m1"], opts["m2"], K,
                                                  seed=seed, tol=tol, max_iter=max_iter)
    elif kind == "fhmm":
        params, report = hierarchical.train_fhmm(obs, tuple(opts["chains"]), K,
                                                 seed=seed, tol=tol, max_iter=max_iter)
    elif kind == "lhmm":
        params, report = hierarchical.train_lhmm(obs, opts["states"], opts["layers"], K,
                                                 seed=seed, tol=tol, max_iter=max_iter)
        extra["warnings"] = list(params.warnings)
    elif kind == "tvar":
        spec_grid = tvar.TvarSpec()
        params, audit = tvar.grid_search(spec_grid, sequence.pitches.astype(float))
        report = None
        extra["grid_audit"] = audit
    elif kind == "random":
        params = hmm.random_params(opts["states"], K, seed)
        report = None
    else:  # pragma: no cover
        raise ValueError(f"unhandled model kind {kind!r}")

    return TrainedModel(spec, alphabet, params, report, obs,
                        seed if isinstance(seed, int) else None, extra)


def model_log_likelihood(model, obs=None):
    """Training-sequence log-likelihood of a fitted model (None for TVAR,
    where the grid-search log marginal is reported instead)."""
    if obs is None:
        obs = model.training_symbols
    kind = model.kind
    if kind in ("hmm", "random"):
        return hmm.log_likelihood(model.params, obs)
    if kind in ("khmm",):
        return variants.khmm_log_likelihood(model.params, obs)
    if kind == "lrhmm":
        p = model.params
        if isinstance(p, variants.KhmmParams):
            return variants.khmm_log_likelihood(p, obs)
        return hmm.log_likelihood(p, obs)
    if kind == "arhmm":
        return variants.arhmm_log_likelihood(model.params, obs)
    if kind == "hsmm":
        return semimarkov.hsmm_log_likelihood(model.params, obs)
    if kind == "nshmm":
        return semimarkov.nshmm_log_likelihood(model.params, obs)
    if kind == "tshmm":
        return hierarchical.tshmm_log_likelihood(model.params, obs)
    if kind == "fhmm":
        return hierarchical.fhmm_log_likelihood(model.params, obs)
    if kind == "lhmm":
        return hierarchical.lhmm_log_likelihood(model.params, obs)
    if kind == "tvar":
        return model.params.log_marginal
    raise ValueError(f"unhandled model kind {kind!r}")


def sample_model(model, length, seed):
    """Draw a new pitch array of the given length from the fitted model."""
    kind = model.kind
    if kind in ("hmm", "random"):
        symbols = hmm.sample(model.params, length, seed)
    elif kind == "khmm":
        symbols = variants.sample_khmm(model.params, length, seed)
    elif kind == "lrhmm":
        p = model.params
        if isinstance(p, variants.KhmmParams):
            symbols = variants.sample_khmm(p, length, seed)
        else:
            symbols = hmm.sample(p, length, seed)
    elif kind == "arhmm":
        symbols = variants.sample_arhmm(model.params, length, seed)
    elif kind == "hsmm":
        symbols = semimarkov.sample_hsmm(model.params, length, seed)
    elif kind == "nshmm":
        symbols = semimarkov.sample_nshmm(model.params, length, seed)
    elif kind == "tshmm":
        symbols = hierarchical.sample_tshmm(model.params, length, seed)
    elif kind == "fhmm":
        symbols = hierarchical.sample_fhmm(model.params, length, seed)
    elif kind == "lhmm":
        symbols = hierarchical.sample_lhmm(model.params, length, seed)
    elif kind == "tvar":
        real = tvar.backward_sample(model.params, length, seed)
        return tvar.bin_to_alphabet(real, model.alphabet)
    else:
        raise ValueError(f"unhandled model kind {kind!r}")
    return model.alphabet.to_pitches(symbols)


def sample_sequence(model, length, seed, ticks_per_quarter=480, name=""):
    """Sample pitches and wrap them as a melody with uniform note spacing."""
    pitches = sample_model(model, length, seed)
    step = ticks_per_quarter // 2
    times = np.arange(length, dtype=np.int64) * step
    return PitchSequence(np.asarray(pitches, dtype=np.int64), times,
                         ticks_per_quarter=ticks_per_quarter, source_name=name)
