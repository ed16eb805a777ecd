"""
Near-real-time scoring of catalog events.

Events are grouped into tumbling windows of ``window_ms``. Within a window the
latest event per (kind, id) wins, events are enriched with category names,
and the affected pairs are rescored through the same path as the batch jobs.
A window's result is published by swapping one store reference under a lock,
so readers only ever see whole windows.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.errors import ConfigError
from app.scoring.base import RelevanceScorer
from app.serving.batch import batch_score_diff
from app.serving.pairs import PairSource, SameCategoryPairs
from app.serving.store import ScoreRecord, ScoreStore
from app.text_core.catalog import Catalog, ItemDoc, Keyphrase
from app.text_core.tokenizer import tokenize

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_MS = 500
EventKind = Literal["item_created", "item_revised", "keyphrase_created"]


class CatalogEvent(BaseModel):
    """Item events carry title and category id; the category name is filled in by enrichment."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: EventKind
    id: int
    event_time: int = Field(ge=0)  # UTC ms
    title: Optional[str] = None
    category_id: Optional[int] = None
    text: Optional[str] = None

    @model_validator(mode="after")
    def _payload_for_kind(self) -> "CatalogEvent":
        if self.kind == "keyphrase_created":
            if not tokenize(self.text or ""):
                raise ValueError("keyphrase_created needs text with at least one token")
        else:
            if not tokenize(self.title or "") or self.category_id is None:
                raise ValueError(f"{self.kind} needs a title with at least one token and category_id")
        return self

    @property
    def dedup_key(self) -> Tuple[str, int]:
        return (self.kind, self.id)


class DeadLetter(BaseModel):
    event: CatalogEvent
    reason: str


class WindowResult(BaseModel):
    window_start: int
    events_in: int
    events_applied: int
    records_applied: int
    dead_letters: List[DeadLetter] = Field(default_factory=list)
    latency_ms: float = 0.0
    failed: bool = False


class CategoryEnrichment:
    """Feature lookup for category names; a miss dead-letters the event."""

    def __init__(self, names: Mapping[int, str]) -> None:
        self.names = dict(names)

    @classmethod
    def from_catalog(cls, catalog: Catalog) -> "CategoryEnrichment":
        return cls({it.category_id: it.category_name for it in catalog.items.values()})

    def category_name(self, category_id: int) -> Optional[str]:
        return self.names.get(category_id)


def dedup_window(events: Iterable[CatalogEvent]) -> List[CatalogEvent]:
    """Latest event per (kind, id); equal event times keep the later arrival."""
    latest: Dict[Tuple[str, int], CatalogEvent] = {}
    for ev in events:
        cur = latest.get(ev.dedup_key)
        if cur is None or ev.event_time >= cur.event_time:
            latest[ev.dedup_key] = ev
    return sorted(latest.values(), key=lambda e: (e.event_time, e.kind, e.id))


class NrtProcessor:
    """Holds the live catalog and store; ``apply_window`` is the single writer."""

    def __init__(
        self,
        scorer: RelevanceScorer,
        catalog: Catalog,
        store: ScoreStore,
        enrichment: CategoryEnrichment,
        pair_source: Optional[PairSource] = None,
    ) -> None:
        self.scorer = scorer
        self.enrichment = enrichment
        self.pair_source = pair_source or SameCategoryPairs()
        self._lock = threading.Lock()
        self._catalog = catalog
        self._store = store
        self.windows = 0
        self.events_seen = 0
        self.failed_windows = 0
        self.dead_letters: List[DeadLetter] = []

    @property
    def store(self) -> ScoreStore:
        return self._store

    @property
    def catalog(self) -> Catalog:
        return self._catalog

    def get(self, item_id: int, keyphrase_id: int) -> Optional[ScoreRecord]:
        return self._store.get(item_id, keyphrase_id)

    def _enrich(self, events: List[CatalogEvent]) -> Tuple[List[ItemDoc], List[Keyphrase], List[DeadLetter]]:
        items: List[ItemDoc] = []
        kps: List[Keyphrase] = []
        dead: List[DeadLetter] = []
        for ev in events:
            current = (self._catalog.keyphrases if ev.kind == "keyphrase_created" else self._catalog.items).get(ev.id)
            if current is not None and ev.event_time < current.updated_at:
                dead.append(DeadLetter(event=ev, reason=f"stale revision: event_time {ev.event_time} "
                                                        f"is older than updated_at {current.updated_at}"))
                continue
            if ev.kind == "keyphrase_created":
                kps.append(Keyphrase(keyphrase_id=ev.id, text=ev.text, category_id=ev.category_id,
                                     updated_at=ev.event_time))
                continue
            name = self.enrichment.category_name(ev.category_id)
            if name is None:
                dead.append(DeadLetter(event=ev, reason=f"enrichment miss: unknown category_id {ev.category_id}"))
                continue
            items.append(ItemDoc(item_id=ev.id, title=ev.title, category_id=ev.category_id,
                                 category_name=name, updated_at=ev.event_time))
        return items, kps, dead

    def apply_window(self, events: List[CatalogEvent], window_start: int = 0) -> WindowResult:
        started = time.perf_counter()
        with self._lock:
            deduped = dedup_window(events)
            items, kps, dead = self._enrich(deduped)
            for d in dead:
                logger.warning("dead-lettered %s %d: %s", d.event.kind, d.event.id, d.reason)
            diff = batch_score_diff(self._store, self.scorer, self._catalog, items, kps, self.pair_source)
            # publish: one reference swap per window
            self._catalog = diff.catalog
            self._store = diff.store
            self.windows += 1
            self.events_seen += len(events)
            self.dead_letters.extend(dead)
        result = WindowResult(
            window_start=window_start,
            events_in=len(events),
            events_applied=len(items) + len(kps),
            records_applied=len(diff.rescored),
            dead_letters=dead,
            latency_ms=(time.perf_counter() - started) * 1000.0,
        )
        logger.info("window %d: %d events, %d applied, %d records, %d dead letters, %.1f ms",
                    window_start, result.events_in, result.events_applied, result.records_applied,
                    len(dead), result.latency_ms)
        return result

    def fail_window(self, events: List[CatalogEvent], reason: str, window_start: int = 0) -> WindowResult:
        """Dead-letters every event of a window whose scoring raised; the store is left as it was."""
        dead = [DeadLetter(event=ev, reason=reason) for ev in events]
        with self._lock:
            self.windows += 1
            self.failed_windows += 1
            self.events_seen += len(events)
            self.dead_letters.extend(dead)
        return WindowResult(window_start=window_start, events_in=len(events), events_applied=0,
                            records_applied=0, dead_letters=dead, failed=True)

    def stats(self) -> Dict[str, object]:
        return {
            "windows": self.windows,
            "failed_windows": self.failed_windows,
            "events_seen": self.events_seen,
            "dead_letters": len(self.dead_letters),
            "records": len(self._store),
            "model_version": self._store.model_version,
        }


def nrt_handle(
    events: Iterable[CatalogEvent],
    processor: NrtProcessor,
    window_ms: int = DEFAULT_WINDOW_MS,
) -> Iterator[WindowResult]:
    """
    Event-time tumbling windows keyed by ``event_time // window_ms``. A window
    closes when an event for a later window arrives or the stream ends; a late
    event joins the window that is currently open.
    """
    if window_ms <= 0:
        raise ConfigError("window_ms must be positive")
    current: Optional[int] = None
    buf: List[CatalogEvent] = []
    for ev in events:
        key = ev.event_time // window_ms
        if current is None:
            current = key
        elif key > current:
            yield processor.apply_window(buf, current * window_ms)
            buf = []
            current = key
        buf.append(ev)
    if buf:
        yield processor.apply_window(buf, current * window_ms)


@dataclass
class NrtService:
    """Processing-time windows for the HTTP front: a worker thread drains the queue every window."""

    processor: NrtProcessor
    window_ms: int = DEFAULT_WINDOW_MS
    results: List[WindowResult] = field(default_factory=list)
    _queue: "queue.Queue[CatalogEvent]" = field(default_factory=queue.Queue, repr=False)
    _stop: threading.Event = field(default_factory=threading.Event, repr=False)
    _thread: Optional[threading.Thread] = field(default=None, repr=False)

    def submit(self, event: CatalogEvent) -> None:
        self._queue.put(event)

    def _drain(self) -> List[CatalogEvent]:
        out: List[CatalogEvent] = []
        while True:
            try:
                out.append(self._queue.get_nowait())
            except queue.Empty:
                return out

    def flush(self) -> Optional[WindowResult]:
        events = self._drain()
        if not events:
            return None
        window_start = int(time.time() * 1000) // self.window_ms * self.window_ms
        try:
            res = self.processor.apply_window(events, window_start)
        except Exception as e:
            logger.exception("NRT window %d failed; %d events dead-lettered", window_start, len(events))
            res = self.processor.fail_window(events, f"window failed: {e!r}", window_start)
        self.results.append(res)
        del self.results[:-100]
        return res

    def _run(self) -> None:
        while not self._stop.wait(self.window_ms / 1000.0):
            self.flush()

    def start(self) -> None:
        if self._thread is not None and self._thread.is_alive():
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="nrt-windows", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.flush()

    def stats(self) -> Dict[str, object]:
        out = self.processor.stats()
        out["queued"] = self._queue.qsize()
        out["window_ms"] = self.window_ms
        out["last_window"] = self.results[-1].model_dump() if self.results else None
        return out


def parse_events(raw: Iterable[Mapping[str, object]]) -> Tuple[List[CatalogEvent], List[Tuple[int, str]]]:
    """Validates raw event dicts; malformed ones come back as (position, error) and never reach a window."""
    events: List[CatalogEvent] = []
    rejected: List[Tuple[int, str]] = []
    for n, obj in enumerate(raw):
        try:
            events.append(CatalogEvent.model_validate(obj))
        except ValidationError as e:
            rejected.append((n, str(e)))
    return events, rejected
