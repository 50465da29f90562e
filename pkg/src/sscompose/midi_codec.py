"""MIDI-CSV ingestion and the flat pitch-sequence representation.

Pieces are treated as a univariate stream of note-on pitches ordered by
timestamp (stable within a timestamp, so chords flatten to consecutive
observations sharing a tick).  Timestamps are retained so the metrics can
still tell simultaneous notes from sequential ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MidiCsvError(ValueError):
    """Malformed MIDI-CSV input."""


@dataclass
class PitchEvent:
    pitch: int
    timestamp: int
    kind: str  # "on" or "off"
    track: int
    velocity: int


@dataclass
class PitchSequence:
    """Flat note-on stream: one pitch per event, chords share a timestamp."""

    pitches: np.ndarray
    timestamps: np.ndarray
    ticks_per_quarter: int = 480
    source_name: str = ""

    def __post_init__(self):
        self.pitches = np.asarray(self.pitches, dtype=np.int64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        if self.pitches.shape != self.timestamps.shape:
            raise ValueError("pitches and timestamps must have equal length")

    def __len__(self):
        return len(self.pitches)

    @property
    def events(self):
        return list(zip(self.pitches.tolist(), self.timestamps.tolist()))


@dataclass
class PitchAlphabet:
    """Sorted distinct pitches of a piece with a bidirectional index."""

    symbols: np.ndarray
    index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if not self.index:
            self.index = {int(p): i for i, p in enumerate(self.symbols)}

    @property
    def size(self):
        return len(self.symbols)

    def to_indices(self, pitches):
        pitches = np.asarray(pitches, dtype=np.int64)
        try:
            return np.array([self.index[int(p)] for p in pitches], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"pitch {exc.args[0]} not in alphabet") from None

    def to_pitches(self, indices):
        return self.symbols[np.asarray(indices, dtype=np.int64)]


def _fields(line):
    return [f.strip() for f in line.split(",")]


def parse_midi_csv(text, source_name=""):
    """Parse a midicsv-convention document into a PitchSequence.

    Only note-on events (velocity > 0) enter the sequence; note-offs and
    zero-velocity note-ons are dropped.  Events from all tracks are merged
    and stably ordered by timestamp, preserving file order within a tick.
    """
    ticks_per_quarter = None
    ons = []  # (timestamp, file_position, pitch)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = _fields(line)
        if len(fields) < 3:
            raise MidiCsvError(f"line {lineno}: expected at least 3 fields, got {len(fields)}")
        rectype = fields[2].lower()
        if rectype == "header":
            if len(fields) < 6:
                raise MidiCsvError(f"line {lineno}: malformed Header record")
            try:
                ticks_per_quarter = int(fields[5])
            except ValueError:
                raise MidiCsvError(f"line {lineno}: non-numeric division in Header") from None
            if ticks_per_quarter <= 0:
                raise MidiCsvError(f"line {lineno}: division must be positive")
        elif rectype in ("note_on_c", "note_off_c"):
            if len(fields) != 6:
                raise MidiCsvError(f"line {lineno}: note record needs 6 fields, got {len(fields)}")
            try:
                time = int(fields[1])
                pitch = int(fields[4])
                velocity = int(fields[5])
            except ValueError:
                raise MidiCsvError(f"line {lineno}: non-numeric note record field") from None
            if not 0 <= pitch <= 127:
                raise MidiCsvError(f"line {lineno}: pitch {pitch} outside 0-127")
            if time < 0:
                raise MidiCsvError(f"line {lineno}: negative timestamp")
            if rectype == "note_on_c" and velocity > 0:
                ons.append((time, lineno, pitch))
        # tempo/meta/track records are ignored: pitch is the modeling object
    if ticks_per_quarter is None:
        raise MidiCsvError("missing Header record")
    ons.sort(key=lambda e: e[0])  # stable: file order preserved within a tick
    pitches = np.array([p for _, _, p in ons], dtype=np.int64)
    times = np.array([t for t, _, _ in ons], dtype=np.int64)
    return PitchSequence(pitches, times, ticks_per_quarter, source_name)


def emit_midi_csv(seq, note_duration=None):
    """Render a PitchSequence back to MIDI-CSV text.

    Every pitch becomes a note-on at its timestamp plus a note-off at
    timestamp + note_duration (default one eighth note).  Round-trip
    parse(emit(seq)) reproduces the (pitch, timestamp) list exactly.
    """
    if len(seq) == 0:
        raise ValueError("cannot emit an empty PitchSequence")
    if note_duration is None:
        note_duration = max(1, seq.ticks_per_quarter // 2)
    if note_duration <= 0:
        raise ValueError("note_duration must be positive")
    events = []  # (time, order, record); offs sort before ons at equal ticks
    for pos, (pitch, time) in enumerate(zip(seq.pitches, seq.timestamps)):
        events.append((int(time), 1, pos, f"1, {int(time)}, Note_on_c, 0, {int(pitch)}, 80"))
        off = int(time) + note_duration
        events.append((off, 0, pos, f"1, {off}, Note_off_c, 0, {int(pitch)}, 0"))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    end = events[-1][0]
    lines = [
        f"0, 0, Header, 1, 1, {seq.ticks_per_quarter}",
        "1, 0, Start_track",
        "1, 0, Tempo, 500000",
    ]
    lines.extend(e[3] for e in events)
    lines.append(f"1, {end}, End_track")
    lines.append(f"0, {end}, End_of_file")
    return "\n".join(lines) + "\n"


def build_alphabet(seq):
    """Sorted deduplicated pitch set of a piece."""
    if len(seq) == 0:
        raise ValueError("cannot build an alphabet from an empty sequence")
    return PitchAlphabet(np.unique(seq.pitches))
