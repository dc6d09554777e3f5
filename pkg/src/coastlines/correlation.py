"""Source windows and temporal self-correlation.

A window holds the anonymized sources seen in one collection period, their
packet counts, and optional category tags. Source ids are opaque: strings
from ingested files, integers from the synthetic generator.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    DegenerateReferenceError,
    DomainError,
    DuplicateWindowError,
    ParseError,
)

CATEGORIES = ("benign", "malicious", "unknown")
QUERYABLE = CATEGORIES + ("total",)


@dataclass(frozen=True, eq=False)
class SourceWindow:
    """One collection window; ``ids`` are sorted and unique.

    ``tags`` aligns with ``ids``; an empty string means no category.
    """

    t_start: int
    ids: np.ndarray
    counts: np.ndarray
    tags: np.ndarray

    def __post_init__(self):
        ids, counts, tags = np.asarray(self.ids), np.asarray(self.counts, dtype=np.int64), np.asarray(self.tags)
        if not (ids.ndim == counts.ndim == tags.ndim == 1 and len(ids) == len(counts) == len(tags)):
            raise ValueError("ids, counts and tags must be aligned 1-D arrays")
        if len(ids) and np.any(counts < 1):
            raise ValueError("packet counts must be >= 1")
        if len(ids) > 1 and not np.all(ids[1:] > ids[:-1]):
            raise ValueError("ids must be sorted and unique; use SourceWindow.from_mapping")
        for a in (ids, counts, tags):
            a.flags.writeable = False
        object.__setattr__(self, "t_start", int(self.t_start))
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "tags", tags)

    @classmethod
    def from_mapping(cls, t_start: int, sources: Mapping, categories: Optional[Mapping] = None) -> "SourceWindow":
        categories = categories or {}
        keys = sorted(sources)
        for k in keys:
            if isinstance(k, str) and not k:
                raise ValueError("source ids must be non-empty")
        ids = np.array(keys) if keys else np.array([], dtype=str)
        counts = np.array([sources[k] for k in keys], dtype=np.int64)
        tags = np.array([categories.get(k, "") for k in keys], dtype=str) if keys else np.array([], dtype=str)
        return cls(t_start, ids, counts, tags)

    def __len__(self):
        return len(self.ids)

    @property
    def sources(self) -> dict:
        return {_plain(k): int(c) for k, c in zip(self.ids, self.counts)}

    @property
    def categories(self) -> dict:
        return {_plain(k): str(t) for k, t in zip(self.ids, self.tags) if t}

    def select(self, mask: np.ndarray) -> "SourceWindow":
        return SourceWindow(self.t_start, self.ids[mask], self.counts[mask], self.tags[mask])

    def to_json(self) -> str:
        d = {"t": self.t_start, "sources": {str(k): v for k, v in self.sources.items()}}
        cats = self.categories
        if cats:
            d["categories"] = {str(k): v for k, v in cats.items()}
        return json.dumps(d, separators=(",", ":"))


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


@dataclass(frozen=True, eq=False)
class CorrelationSeries:
    lags: np.ndarray
    values: np.ndarray
    ref_count: int

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        if lags.shape != values.shape or lags.ndim != 1:
            raise ValueError("lags and values must be aligned 1-D arrays")
        if np.any((values < 0) | (values > 1)):
            raise DomainError("correlation values must lie in [0, 1]")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.lags)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("lag_seconds,correlation\n")
        for t, v in zip(self.lags, self.values):
            buf.write(f"{t},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CorrelationSeries":
        lags, values = [], []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or (lineno == 1 and line.startswith("lag")):
                continue
            try:
                t, v = line.split(",")
                lags.append(int(t))
                values.append(float(v))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
        return cls(np.array(lags, dtype=np.int64), np.array(values), 0)


# ingestion


def _read_text(source: Union[bytes, str, IO]) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _check_count(value, lineno):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ParseError(f"packet count must be a positive integer, got {value!r}", line=lineno)
    return value


def _parse_jsonl(text: str) -> list[SourceWindow]:
    windows = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line, object_pairs_hook=lambda pairs: pairs)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=lineno) from None
        if not isinstance(record, list):
            raise ParseError("expected a JSON object", line=lineno)
        fields = dict(record)
        if "t" not in fields or "sources" not in fields:
            raise ParseError("missing 't' or 'sources'", line=lineno)
        t = fields["t"]
        if isinstance(t, bool) or not isinstance(t, int):
            raise ParseError(f"'t' must be an integer, got {t!r}", line=lineno)
        if not isinstance(fields["sources"], list):
            raise ParseError("'sources' must be an object", line=lineno)
        sources = defaultdict(int)
        for sid, count in fields["sources"]:
            if not sid:
                raise ParseError("empty source id", line=lineno)
            sources[sid] += _check_count(count, lineno)
        cats = fields.get("categories") or []
        if not isinstance(cats, list):
            raise ParseError("'categories' must be an object", line=lineno)
        categories = {}
        for sid, tag in cats:
            if not isinstance(tag, str):
                raise ParseError(f"category tag must be a string, got {tag!r}", line=lineno)
            categories[sid] = tag
        if t in windows:
            raise DuplicateWindowError(f"line {lineno}: duplicate window t={t}")
        windows[t] = SourceWindow.from_mapping(t, sources, categories)
    return [windows[t] for t in sorted(windows)]


def _parse_csv(text: str) -> list[SourceWindow]:
    sources = defaultdict(lambda: defaultdict(int))
    categories = defaultdict(dict)
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not any(c.strip() for c in row):
            continue
        if lineno == 1 and row[0].strip() == "t":
            continue
        if len(row) not in (3, 4):
            raise ParseError(f"expected t,source_id,count[,category], got {len(row)} fields", line=lineno)
        try:
            t = int(row[0])
            count = int(row[2])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        sid = row[1].strip()
        if not sid:
            raise ParseError("empty source id", line=lineno)
        sources[t][sid] += _check_count(count, lineno)
        if len(row) == 4 and row[3].strip():
            categories[t][sid] = row[3].strip()
    return [SourceWindow.from_mapping(t, sources[t], categories[t]) for t in sorted(sources)]


def ingest_windows(source, format: str = "jsonl") -> list[SourceWindow]:
    """Parse windows from JSONL or CSV; result is sorted by ``t_start``.

    Repeated source ids within a window have their counts summed. In CSV,
    rows sharing ``t`` form one window.
    """
    text = _read_text(source)
    if format == "jsonl":
        return _parse_jsonl(text)
    if format == "csv":
        return _parse_csv(text)
    raise ValueError(f"unknown window format {format!r}")


def windows_to_jsonl(windows: Iterable[SourceWindow]) -> str:
    return "".join(w.to_json() + "\n" for w in windows)


# filters


def filter_degree(w: SourceWindow, i: int) -> SourceWindow:
    """Sources with ``2**i <= count < 2**(i+1)``."""
    if i < 0:
        raise DomainError("degree band index must be non-negative")
    lo = 1 << i
    return w.select((w.counts >= lo) & (w.counts < 2 * lo))


def filter_category(w: SourceWindow, tag: str) -> SourceWindow:
    if tag not in QUERYABLE:
        raise DomainError(f"category must be one of {QUERYABLE}, got {tag!r}")
    if tag == "total":
        return w
    return w.select(w.tags == tag)


def max_degree_band(windows: Sequence[SourceWindow]) -> int:
    top = max((int(w.counts.max()) for w in windows if len(w)), default=1)
    return top.bit_length() - 1


# correlation


def overlap_count(ref_ids: np.ndarray, ids: np.ndarray) -> int:
    if len(ref_ids) == 0 or len(ids) == 0:
        return 0
    pos = np.searchsorted(ref_ids, ids)
    pos[pos == len(ref_ids)] = 0
    return int(np.count_nonzero(ref_ids[pos] == ids))


def self_correlation(windows: Sequence[SourceWindow], ref_t: int) -> CorrelationSeries:
    """Fraction of the reference window's sources seen in each window, by lag."""
    ref = next((w for w in windows if w.t_start == ref_t), None)
    if ref is None or len(ref) == 0:
        raise DegenerateReferenceError(f"no non-empty window at t={ref_t}")
    ordered = sorted(windows, key=lambda w: w.t_start)
    lags = np.array([w.t_start - ref_t for w in ordered], dtype=np.int64)
    n = len(ref)
    values = np.array([1.0 if w is ref else overlap_count(ref.ids, w.ids) / n for w in ordered])
    return CorrelationSeries(lags, values, n)


def mean_self_correlation(windows: Sequence[SourceWindow], ref_ts: Optional[Sequence[int]] = None) -> CorrelationSeries:
    """Average of single-reference series over ``ref_ts`` (default: every non-empty window).

    Each lag is averaged over the references that reach it.
    """
    if ref_ts is None:
        ref_ts = [w.t_start for w in windows if len(w)]
    sums, hits = defaultdict(float), defaultdict(int)
    total = 0
    for t in ref_ts:
        s = self_correlation(windows, t)
        total += s.ref_count
        for lag, v in zip(s.lags.tolist(), s.values.tolist()):
            sums[lag] += v
            hits[lag] += 1
    if not sums:
        raise DegenerateReferenceError("no reference windows")
    lags = sorted(sums)
    return CorrelationSeries(np.array(lags), np.array([sums[k] / hits[k] for k in lags]), total)


# synthetic windows


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic population whose self-correlation follows ``beta/(beta+|t|^alpha)``.

    Window ``k`` sits at lag ``(k - center) * window_spacing``; the reference
    (lag 0) holds every source. ``degree_band`` fixes packet counts in
    ``[2**band, 2**(band+1))``.
    """

    n_sources: int
    alpha_mc: float
    beta_mc: float
    window_spacing: int = 1
    n_windows: int = 21
    symmetric: bool = False
    degree_band: int = 0
    category: str = ""

    def __post_init__(self):
        if not (self.n_sources > 0 and self.alpha_mc > 0 and self.beta_mc > 0):
            raise DomainError("n_sources, alpha_mc and beta_mc must be positive")
        if not (self.window_spacing > 0 and self.n_windows > 0 and self.degree_band >= 0):
            raise DomainError("window_spacing and n_windows must be positive")

    def lags(self) -> np.ndarray:
        k = np.arange(self.n_windows)
        center = (self.n_windows - 1) // 2 if self.symmetric else 0
        return (k - center) * self.window_spacing

    def retention(self, lag) -> np.ndarray:
        t = np.abs(np.asarray(lag, dtype=float))
        return self.beta_mc / (self.beta_mc + t**self.alpha_mc)


def _window_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def synth_windows(spec: SynthSpec, seed: int, t0: int = 0, id_offset: int = 0, stream: int = 0) -> list[SourceWindow]:
    """Windows where each source survives to lag t independently with the ModCauchy probability.

    Each window draws from its own counter-based stream, so output depends
    only on the arguments.
    """
    ids = np.arange(id_offset, id_offset + spec.n_sources, dtype=np.int64)
    lo = 1 << spec.degree_band
    counts = lo + _window_rng(seed, stream, 1 << 20).integers(0, lo, size=spec.n_sources)
    tags = np.full(spec.n_sources, spec.category)
    out = []
    for k, lag in enumerate(spec.lags()):
        lag = int(lag)
        if lag == 0:
            keep = np.ones(spec.n_sources, dtype=bool)
        else:
            keep = _window_rng(seed, stream, k).random(spec.n_sources) < spec.retention(lag)
        out.append(SourceWindow(t0 + lag, ids[keep], counts[keep], tags[keep]))
    return out


def merge_windows(groups: Sequence[Sequence[SourceWindow]]) -> list[SourceWindow]:
    """Union windows with equal ``t_start`` across groups with disjoint ids."""
    by_t = defaultdict(list)
    for group in groups:
        for w in group:
            by_t[w.t_start].append(w)
    merged = []
    for t in sorted(by_t):
        parts = by_t[t]
        ids = np.concatenate([w.ids for w in parts])
        order = np.argsort(ids, kind="stable")
        merged.append(
            SourceWindow(
                t,
                ids[order],
                np.concatenate([w.counts for w in parts])[order],
                np.concatenate([w.tags for w in parts])[order],
            )
        )
    return merged


def synth_population(specs: Sequence[SynthSpec], seed: int, t0: int = 0) -> list[SourceWindow]:
    """Several synthetic groups sharing window times, with disjoint id ranges."""
    groups = []
    offset = 0
    for k, spec in enumerate(specs):
        groups.append(synth_windows(spec, seed, t0=t0, id_offset=offset, stream=k))
        offset += spec.n_sources
    return merge_windows(groups)
