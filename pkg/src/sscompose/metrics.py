"""Evaluation metrics: originality (entropy, mutual information, edit
distance), musicality (dissonance, large intervals, pitch distribution)
and temporal structure (ACF/PACF), plus the RMSE aggregation used to
rank batches of generated pieces against their training piece.

All entropies and mutual informations are in nats.  Melodic lines are
extracted per timestamp: treble = highest pitch, bass = lowest pitch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DISSONANT_CLASSES = frozenset({1, 2, 10, 11})   # minor/major second, minor/major seventh
THIRD_CLASSES = frozenset({3, 4})
FOURTH_FIFTH_CLASSES = frozenset({5, 7})
OCTAVE = 12
DEFAULT_MAX_LAG = 40


@dataclass
class MetricVector:
    entropy: float
    dissonance_rate: float
    large_interval_rate: float
    pitch_histogram: np.ndarray
    acf: np.ndarray | None
    pacf: np.ndarray | None
    n_notes: int
    name: str = ""


@dataclass
class PairMetrics:
    mutual_information: float
    edit_distance_normalized: float


@dataclass
class EvaluationReport:
    entropy_rmse: float
    dissonance_rmse: float
    large_interval_rmse: float
    note_count_rmse: float
    acf_rmse: float
    pacf_rmse: float
    mutual_information_mean: float
    edit_distance_mean: float
    musicality_average: float
    temporal_average: float
    per_piece: list = field(default_factory=list)      # (MetricVector, PairMetrics)
    skipped: list = field(default_factory=list)        # (index, reason) pairs
    training_metrics: MetricVector | None = None

    def criterion(self, name):
        table = {"entropy-rmse": self.entropy_rmse,
                 "musicality-avg": self.musicality_average,
                 "temporal-avg": self.temporal_average}
        if name not in table:
            raise ValueError(f"unknown criterion {name!r}; valid: {sorted(table)}")
        return table[name]


# ---------------------------------------------------------------------------
# originality


def empirical_entropy(pitches):
    """H = -sum p_k ln p_k over the piece's pitch relative frequencies."""
    pitches = np.asarray(pitches)
    if pitches.size == 0:
        raise ValueError("cannot compute the entropy of an empty sequence")
    _, counts = np.unique(pitches, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def mutual_information(train_pitches, gen_pitches):
    """Plug-in MI of the aligned pairs (x_t, y_t) over the shared prefix."""
    x = np.asarray(train_pitches)
    y = np.asarray(gen_pitches)
    if x.size == 0 or y.size == 0:
        raise ValueError("cannot compute mutual information with an empty sequence")
    L = min(len(x), len(y))
    x, y = x[:L], y[:L]
    xs, xi = np.unique(x, return_inverse=True)
    ys, yi = np.unique(y, return_inverse=True)
    joint = np.zeros((len(xs), len(ys)))
    np.add.at(joint, (xi, yi), 1.0)
    joint /= L
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    ratio = joint[nz] / (np.outer(px, py)[nz])
    return float((joint[nz] * np.log(ratio)).sum())


def levenshtein(a, b):
    """Unit-cost edit distance (insertions, deletions, substitutions)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) == 0:
        return len(b)
    if len(b) == 0:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    m = len(b)
    prev = np.arange(m + 1)
    js = np.arange(1, m + 1)
    for i, ai in enumerate(a, start=1):
        cand = np.minimum(prev[1:] + 1, prev[:-1] + (b != ai))
        # resolve the within-row dependence: D[j] = min_{k<=j} cand[k] + (j - k)
        cur = np.empty(m + 1, dtype=np.int64)
        cur[0] = i
        cur[1:] = np.minimum.accumulate(np.minimum(cand, cur[0] + js) - js) + js
        prev = cur
    return int(prev[-1])


def edit_distance(a, b):
    """Levenshtein distance normalized by max length; empty vs empty is 0."""
    a = np.asarray(a)
    b = np.asarray(b)
    denom = max(len(a), len(b))
    if denom == 0:
        return 0.0
    return levenshtein(a, b) / denom


# ---------------------------------------------------------------------------
# musicality


def _lines(seq):
    """Per-timestamp treble (max) and bass (min) pitches, in time order."""
    times = np.asarray(seq.timestamps)
    pitches = np.asarray(seq.pitches)
    uniq, start = np.unique(times, return_index=True)
    order = np.argsort(times, kind="stable")
    treble = np.empty(len(uniq), dtype=np.int64)
    bass = np.empty(len(uniq), dtype=np.int64)
    groups = []
    pos = 0
    sorted_p = pitches[order]
    counts = np.bincount(np.searchsorted(uniq, times[order]))
    for g, c in enumerate(counts):
        chunk = sorted_p[pos:pos + c]
        treble[g] = chunk.max()
        bass[g] = chunk.min()
        groups.append(chunk)
        pos += c
    return treble, bass, groups


def dissonance_rate(seq):
    """Dissonant harmonic pairs within chords plus dissonant melodic steps of
    the treble line, normalized by the total note count."""
    if len(seq) == 0:
        raise ValueError("empty sequence")
    treble, _, groups = _lines(seq)
    count = 0
    for chunk in groups:
        if len(chunk) > 1:
            diffs = np.abs(chunk[:, None] - chunk[None, :])[np.triu_indices(len(chunk), 1)]
            count += int(np.isin(diffs % OCTAVE, list(DISSONANT_CLASSES)).sum())
    if len(treble) > 1:
        steps = np.abs(np.diff(treble)) % OCTAVE
        count += int(np.isin(steps, list(DISSONANT_CLASSES)).sum())
    return count / len(seq)


def large_interval_rate(seq):
    """Jumps of more than an octave in the treble and bass lines,
    normalized by the total note count."""
    if len(seq) == 0:
        raise ValueError("empty sequence")
    treble, bass, _ = _lines(seq)
    count = 0
    if len(treble) > 1:
        count += int((np.abs(np.diff(treble)) > OCTAVE).sum())
        # skip bass steps identical to the treble step (monophonic stretches),
        # so a single-line jump is counted once
        distinct = (bass[:-1] != treble[:-1]) | (bass[1:] != treble[1:])
        count += int(((np.abs(np.diff(bass)) > OCTAVE) & distinct).sum())
    return count / len(seq)


def pitch_histogram(pitches, union_symbols):
    """Relative pitch frequencies over a union alphabet (zeros when absent)."""
    pitches = np.asarray(pitches)
    if pitches.size == 0:
        raise ValueError("empty sequence")
    union_symbols = np.asarray(union_symbols)
    idx = np.searchsorted(union_symbols, pitches)
    if np.any(idx >= len(union_symbols)) or np.any(union_symbols[np.minimum(idx, len(union_symbols) - 1)] != pitches):
        raise ValueError("sequence contains pitches outside the union alphabet")
    hist = np.bincount(idx, minlength=len(union_symbols)).astype(float)
    return hist / hist.sum()


def interval_class_table(seq, mode):
    """Fractions of simple intervals that are thirds, perfect fourths/fifths
    and dissonant.  Harmonic mode pairs all notes within a chord; melodic
    mode steps along the treble and bass lines."""
    if mode not in ("harmonic", "melodic"):
        raise ValueError("mode must be 'harmonic' or 'melodic'")
    treble, bass, groups = _lines(seq)
    intervals = []
    if mode == "harmonic":
        for chunk in groups:
            if len(chunk) > 1:
                diffs = np.abs(chunk[:, None] - chunk[None, :])[np.triu_indices(len(chunk), 1)]
                intervals.extend((diffs % OCTAVE).tolist())
    else:
        if len(treble) > 1:
            intervals.extend((np.abs(np.diff(treble)) % OCTAVE).tolist())
            intervals.extend((np.abs(np.diff(bass)) % OCTAVE).tolist())
    if not intervals:
        raise ValueError(f"piece contains no {mode} intervals")
    classes = np.asarray(intervals)
    n = len(classes)
    return {
        "thirds": float(np.isin(classes, list(THIRD_CLASSES)).sum() / n),
        "fourths_fifths": float(np.isin(classes, list(FOURTH_FIFTH_CLASSES)).sum() / n),
        "dissonant": float(np.isin(classes, list(DISSONANT_CLASSES)).sum() / n),
    }


# ---------------------------------------------------------------------------
# temporal structure


def acf_pacf(values, max_lag=DEFAULT_MAX_LAG):
    """Sample ACF (biased 1/T autocovariances) at lags 1..max_lag and the
    PACF obtained from it by the Durbin-Levinson recursion."""
    x = np.asarray(values, dtype=float)
    T = len(x)
    if T <= max_lag + 1:
        raise ValueError("sequence too short for the requested number of lags")
    xc = x - x.mean()
    gamma0 = float(xc @ xc) / T
    if gamma0 <= 0:
        raise ValueError("zero-variance sequence: correlation undefined")
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    for h in range(1, max_lag + 1):
        rho[h] = float(xc[h:] @ xc[:-h]) / T / gamma0

    pacf = np.empty(max_lag)
    phi = np.zeros(max_lag + 1)
    phi[1] = rho[1]
    pacf[0] = rho[1]
    denom = 1.0 - rho[1] * rho[1]
    for h in range(2, max_lag + 1):
        num = rho[h] - phi[1:h] @ rho[h - 1:0:-1]
        if abs(denom) < 1e-300:
            raise ValueError(f"Durbin-Levinson breakdown at lag {h}")
        phi_hh = num / denom
        phi_new = phi.copy()
        phi_new[h] = phi_hh
        phi_new[1:h] = phi[1:h] - phi_hh * phi[h - 1:0:-1]
        denom *= 1.0 - phi_hh * phi_hh
        phi = phi_new
        pacf[h - 1] = phi_hh
    return rho[1:], pacf


# ---------------------------------------------------------------------------
# aggregation


def rmse(values, reference):
    """sqrt((1/n) sum (y_i - y_0)^2)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("rmse of an empty list is undefined")
    return float(np.sqrt(np.mean((values - reference) ** 2)))


def compute_metrics(seq, union_symbols, max_lag=DEFAULT_MAX_LAG):
    """Per-piece metric vector; ACF/PACF are None when undefined."""
    try:
        acf, pacf = acf_pacf(seq.pitches, max_lag)
    except ValueError:
        acf, pacf = None, None
    return MetricVector(
        entropy=empirical_entropy(seq.pitches),
        dissonance_rate=dissonance_rate(seq),
        large_interval_rate=large_interval_rate(seq),
        pitch_histogram=pitch_histogram(seq.pitches, union_symbols),
        acf=acf,
        pacf=pacf,
        n_notes=len(seq),
        name=seq.source_name,
    )


def evaluate_batch(train_seq, batch, max_lag=DEFAULT_MAX_LAG):
    """Score a batch of generated pieces against the training piece.

    RMSE per Eq.-style aggregation for entropy/dissonance/large-interval;
    note-count and ACF/PACF RMSEs pool over (piece x pitch) and
    (piece x lag) cells; MI and edit distance are reported as batch
    means.  Pieces whose ACF is undefined are excluded from the temporal
    pooling and listed in `skipped`.
    """
    if len(batch) < 1:
        raise ValueError("batch must contain at least one piece")
    max_lag = min(max_lag, len(train_seq) - 2)
    union = np.unique(np.concatenate([np.asarray(train_seq.pitches)]
                                     + [np.asarray(g.pitches) for g in batch]))
    ref = compute_metrics(train_seq, union, max_lag)
    if ref.acf is None:
        raise ValueError("training piece has undefined ACF (constant or too short)")

    per_piece = []
    skipped = []
    ent, dis, li = [], [], []
    hist_sq = []
    acf_sq, pacf_sq = [], []
    mi, ed = [], []
    for i, piece in enumerate(batch):
        mv = compute_metrics(piece, union, max_lag)
        pm = PairMetrics(
            mutual_information(train_seq.pitches, piece.pitches),
            edit_distance(train_seq.pitches, piece.pitches),
        )
        per_piece.append((mv, pm))
        ent.append(mv.entropy)
        dis.append(mv.dissonance_rate)
        li.append(mv.large_interval_rate)
        hist_sq.append((mv.pitch_histogram - ref.pitch_histogram) ** 2)
        mi.append(pm.mutual_information)
        ed.append(pm.edit_distance_normalized)
        if mv.acf is None:
            skipped.append((i, "undefined ACF (constant or too-short piece)"))
        else:
            acf_sq.append((mv.acf - ref.acf) ** 2)
            pacf_sq.append((mv.pacf - ref.pacf) ** 2)

    entropy_rmse = rmse(ent, ref.entropy)
    dissonance_rmse = rmse(dis, ref.dissonance_rate)
    li_rmse = rmse(li, ref.large_interval_rate)
    note_count_rmse = float(np.sqrt(np.mean(np.stack(hist_sq))))
    acf_rmse = float(np.sqrt(np.mean(np.stack(acf_sq)))) if acf_sq else float("nan")
    pacf_rmse = float(np.sqrt(np.mean(np.stack(pacf_sq)))) if pacf_sq else float("nan")
    musicality = float(np.mean([dissonance_rmse, li_rmse, note_count_rmse]))
    temporal = float(np.mean([acf_rmse, pacf_rmse]))
    return EvaluationReport(
        entropy_rmse=entropy_rmse,
        dissonance_rmse=dissonance_rmse,
        large_interval_rmse=li_rmse,
        note_count_rmse=note_count_rmse,
        acf_rmse=acf_rmse,
        pacf_rmse=pacf_rmse,
        mutual_information_mean=float(np.mean(mi)),
        edit_distance_mean=float(np.mean(ed)),
        musicality_average=musicality,
        temporal_average=temporal,
        per_piece=per_piece,
        skipped=skipped,
        training_metrics=ref,
    )


def piece_scores(report):
    """Per-piece deviation scores used for top-piece selection: entropy
    deviation, musicality average and temporal average, one row per piece."""
    ref = report.training_metrics
    rows = []
    for i, (mv, pm) in enumerate(report.per_piece):
        nc = float(np.sqrt(np.mean((mv.pitch_histogram - ref.pitch_histogram) ** 2)))
        music = float(np.mean([abs(mv.dissonance_rate - ref.dissonance_rate),
                               abs(mv.large_interval_rate - ref.large_interval_rate), nc]))
        if mv.acf is not None:
            acf_dev = float(np.sqrt(np.mean((mv.acf - ref.acf) ** 2)))
            pacf_dev = float(np.sqrt(np.mean((mv.pacf - ref.pacf) ** 2)))
            temporal = (acf_dev + pacf_dev) / 2.0
        else:
            temporal = float("inf")
        rows.append({
            "piece": i,
            "entropy-rmse": abs(mv.entropy - ref.entropy),
            "musicality-avg": music,
            "temporal-avg": temporal,
            "mutual_information": pm.mutual_information,
            "edit_distance": pm.edit_distance_normalized,
        })
    return rows
