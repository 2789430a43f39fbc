"""Intel Lab trace ingestion, cleaning, and seeded synthetic series."""

from __future__ import annotations

import gzip
import hashlib
import io
import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

__all__ = [
    "CleanResult",
    "NodeSeries",
    "ParseResult",
    "Reading",
    "SynthKind",
    "SynthSpec",
    "clean",
    "load_readings",
    "open_text",
    "parse_readings",
    "series_digest",
    "slice_series",
    "synth",
    "write_series_csv",
]

MOTE_MIN, MOTE_MAX = 1, 54
DEFAULT_BOUNDS = (-10.0, 50.0)


@dataclass(frozen=True)
class Reading:
    node_id: int
    epoch: int
    temperature: float
    timestamp: datetime | None = None


@dataclass(frozen=True)
class NodeSeries:
    node_id: int
    epochs: tuple[int, ...]
    temperatures: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.temperatures)

    def to_readings(self) -> list[Reading]:
        return [Reading(self.node_id, e, t) for e, t in zip(self.epochs, self.temperatures)]


@dataclass
class ParseResult:
    readings: list[Reading] = field(default_factory=list)
    rejects: list[tuple[int, str]] = field(default_factory=list)

    @property
    def lines(self) -> int:
        return len(self.readings) + len(self.rejects)


def _parse_timestamp(date: str, time: str) -> datetime:
    text = f"{date} {time}"
    fmt = "%Y-%m-%d %H:%M:%S.%f" if "." in time else "%Y-%m-%d %H:%M:%S"
    return datetime.strptime(text, fmt)


def parse_readings(stream: Iterable[str] | Iterable[bytes]) -> ParseResult:
    """Parse ``date time epoch moteid temperature humidity light voltage`` lines.

    Never raises on content: every bad line becomes a ``(line_no, reason)``
    reject. Humidity, light and voltage must parse but are discarded.
    """
    result = ParseResult()
    for line_no, raw in enumerate(stream, 1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="replace")
        parts = raw.split()
        if len(parts) != 8:
            result.rejects.append((line_no, f"expected 8 fields, got {len(parts)}"))
            continue
        date, time, epoch_s, mote_s, temp_s = parts[:5]
        try:
            ts = _parse_timestamp(date, time)
        except ValueError:
            result.rejects.append((line_no, "bad timestamp"))
            continue
        try:
            epoch, mote = int(epoch_s), int(mote_s)
            temp = float(temp_s)
            for extra in parts[5:]:
                float(extra)
        except ValueError:
            result.rejects.append((line_no, "unparseable number"))
            continue
        if epoch < 0:
            result.rejects.append((line_no, "negative epoch"))
            continue
        if not MOTE_MIN <= mote <= MOTE_MAX:
            result.rejects.append((line_no, f"moteid {mote} out of range"))
            continue
        if not math.isfinite(temp):
            result.rejects.append((line_no, "non-finite temperature"))
            continue
        result.readings.append(Reading(mote, epoch, temp, ts))
    return result


def open_text(path: str | Path) -> IO[str]:
    """Open a plain or gzip-compressed text file (detected by magic bytes)."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", errors="replace")
    return path.open("r", encoding="utf-8", errors="replace")


def load_readings(path: str | Path) -> ParseResult:
    with open_text(path) as fh:
        return parse_readings(fh)


@dataclass
class CleanResult:
    series: dict[int, NodeSeries]
    duplicates: dict[int, int]
    out_of_bounds: dict[int, int]

    def drops(self, node_id: int) -> int:
        return self.duplicates.get(node_id, 0) + self.out_of_bounds.get(node_id, 0)


def clean(
    readings: Iterable[Reading], bounds: tuple[float, float] = DEFAULT_BOUNDS
) -> CleanResult:
    """Per node: sort by epoch, keep the first reading of each epoch, drop implausible values."""
    t_min, t_max = bounds
    grouped: dict[int, list[Reading]] = {}
    for r in readings:
        grouped.setdefault(r.node_id, []).append(r)
    series: dict[int, NodeSeries] = {}
    dups: dict[int, int] = {}
    oob: dict[int, int] = {}
    for node in sorted(grouped):
        rows = sorted(grouped[node], key=lambda r: r.epoch)  # stable: keeps input order on ties
        epochs: list[int] = []
        temps: list[float] = []
        last = None
        n_dup = n_oob = 0
        for r in rows:
            if r.epoch == last:
                n_dup += 1
                continue
            last = r.epoch
            if not (t_min <= r.temperature <= t_max) or not math.isfinite(r.temperature):
                n_oob += 1
                continue
            epochs.append(r.epoch)
            temps.append(r.temperature)
        dups[node], oob[node] = n_dup, n_oob
        if temps:
            series[node] = NodeSeries(node, tuple(epochs), tuple(temps))
    return CleanResult(series, dups, oob)


def slice_series(series: NodeSeries, start: int, end: int | None) -> NodeSeries:
    """Positional slice ``[start, end)`` over a node's cleaned readings."""
    return NodeSeries(series.node_id, series.epochs[start:end], series.temperatures[start:end])


def write_series_csv(series: Mapping[int, NodeSeries], out: IO[str]) -> None:
    out.write("node_id,epoch,temperature\n")
    for node in sorted(series):
        s = series[node]
        for e, t in zip(s.epochs, s.temperatures):
            out.write(f"{node},{e},{t!r}\n")


def series_digest(series: Mapping[int, NodeSeries]) -> str:
    """SHA-256 of the normalized CSV rendering; stable across runs and platforms."""
    buf = io.StringIO()
    write_series_csv(series, buf)
    return hashlib.sha256(buf.getvalue().encode()).hexdigest()


class SynthKind(str, Enum):
    CONSTANT = "Constant"
    RAMP = "Ramp"
    SINE_NOISE = "SineNoise"
    RANDOM_WALK = "RandomWalk"


@dataclass(frozen=True)
class SynthSpec:
    kind: SynthKind
    length: int
    seed: int = 0
    level: float = 20.0
    slope: float = 0.0
    amplitude: float = 1.0
    period: float = 100.0
    noise_sd: float = 0.0
    step_sd: float = 0.1
    node_id: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SynthKind(self.kind))


def synth(spec: SynthSpec) -> NodeSeries:
    if spec.length < 1:
        raise ValueError(f"length must be >= 1, got {spec.length}")
    for name in ("level", "slope", "amplitude", "period", "noise_sd", "step_sd"):
        if not math.isfinite(getattr(spec, name)):
            raise ValueError(f"{name} must be finite")
    if spec.noise_sd < 0 or spec.step_sd < 0:
        raise ValueError("noise_sd and step_sd must be >= 0")
    n = spec.length
    i = np.arange(n, dtype=float)
    rng = np.random.default_rng(spec.seed)
    if spec.kind is SynthKind.CONSTANT:
        values = np.full(n, spec.level)
    elif spec.kind is SynthKind.RAMP:
        values = spec.level + spec.slope * i
    elif spec.kind is SynthKind.SINE_NOISE:
        if spec.period <= 0:
            raise ValueError("period must be > 0")
        values = (
            spec.level
            + spec.amplitude * np.sin(2 * np.pi * i / spec.period)
            + rng.normal(0.0, spec.noise_sd, n)
        )
    else:
        steps = rng.normal(0.0, spec.step_sd, n)
        steps[0] = 0.0
        values = spec.level + np.cumsum(steps)
    return NodeSeries(spec.node_id, tuple(range(n)), tuple(float(v) for v in values))
