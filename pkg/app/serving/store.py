"""
Score store: a directory with one or more segment files plus ``manifest.json``.

Segment byte layout (little endian):

    header  <4s H I>      magic b"KPSS", format version, record count
    record  <q q d B q>   item_id, keyphrase_id, score, pass (0/1), updated_at (UTC ms)

Records are sorted by (item_id, keyphrase_id) and keys are unique. The
manifest holds {version, model_version, threshold, count, checksum, segments};
the checksum is sha256 over the concatenated segment bytes and each segment
file is named by its own checksum prefix, so equal contents give byte-identical
directories.
"""

from __future__ import annotations

import hashlib
import logging
import os
import struct
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.errors import DataError, VersionMismatchError
from app.runs.store import read_manifest, write_manifest

logger = logging.getLogger(__name__)

MAGIC = b"KPSS"
STORE_FORMAT = 1
HEADER = struct.Struct("<4sHI")
RECORD = struct.Struct("<qqdBq")

Pair = Tuple[int, int]
# score, passed, updated_at
Entry = Tuple[float, bool, int]


class ScoreRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    item_id: int
    keyphrase_id: int
    score: float = Field(ge=0.0, le=1.0)
    passed: bool
    model_version: str
    updated_at: int = 0

    @property
    def key(self) -> Pair:
        return (self.item_id, self.keyphrase_id)


def _wins(new: Entry, old: Entry) -> bool:
    """Last write wins on updated_at; equal timestamps fall back to (score, pass) so merges are order-free."""
    return (new[2], new[0], new[1]) > (old[2], old[0], old[1])


class ScoreStore:
    """
    Immutable, version-pure collection of scores. Every mutation returns a new
    store, which lets the NRT path publish a window by swapping one reference.
    """

    def __init__(self, model_version: str, threshold: float, entries: Optional[Mapping[Pair, Entry]] = None) -> None:
        self.model_version = model_version
        self.threshold = float(threshold)
        self._entries: Dict[Pair, Entry] = dict(entries or {})
        self._bytes: Optional[bytes] = None

    # -----------------------------
    # Reads
    # -----------------------------
    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: Pair) -> bool:
        return key in self._entries

    def get(self, item_id: int, keyphrase_id: int) -> Optional[ScoreRecord]:
        e = self._entries.get((item_id, keyphrase_id))
        if e is None:
            return None
        return ScoreRecord(item_id=item_id, keyphrase_id=keyphrase_id, score=e[0], passed=e[1],
                           model_version=self.model_version, updated_at=e[2])

    def keys(self) -> List[Pair]:
        return sorted(self._entries)

    def entries(self) -> Iterator[Tuple[Pair, Entry]]:
        for k in sorted(self._entries):
            yield k, self._entries[k]

    def records(self) -> Iterator[ScoreRecord]:
        for (i, k), e in self.entries():
            yield ScoreRecord(item_id=i, keyphrase_id=k, score=e[0], passed=e[1],
                              model_version=self.model_version, updated_at=e[2])

    def keys_for_items(self, item_ids: Iterable[int]) -> List[Pair]:
        wanted = set(item_ids)
        return [k for k in self._entries if k[0] in wanted]

    def keys_for_keyphrases(self, keyphrase_ids: Iterable[int]) -> List[Pair]:
        wanted = set(keyphrase_ids)
        return [k for k in self._entries if k[1] in wanted]

    # -----------------------------
    # Writes (copy on write)
    # -----------------------------
    def merge(self, records: Iterable[ScoreRecord]) -> "ScoreStore":
        out = dict(self._entries)
        for r in records:
            if r.model_version != self.model_version:
                raise VersionMismatchError(self.model_version, r.model_version)
            new: Entry = (float(r.score), bool(r.passed), int(r.updated_at))
            old = out.get(r.key)
            if old is None or _wins(new, old):
                out[r.key] = new
        return ScoreStore(self.model_version, self.threshold, out)

    def delete(self, keys: Iterable[Pair]) -> "ScoreStore":
        out = dict(self._entries)
        for k in keys:
            out.pop(k, None)
        return ScoreStore(self.model_version, self.threshold, out)

    # -----------------------------
    # Bytes
    # -----------------------------
    def segment_bytes(self) -> bytes:
        if self._bytes is None:
            parts = [HEADER.pack(MAGIC, STORE_FORMAT, len(self._entries))]
            for (i, k), (score, passed, ts) in self.entries():
                parts.append(RECORD.pack(i, k, score, 1 if passed else 0, ts))
            self._bytes = b"".join(parts)
        return self._bytes

    @property
    def checksum(self) -> str:
        return hashlib.sha256(self.segment_bytes()).hexdigest()

    def manifest(self) -> Dict[str, object]:
        checksum = self.checksum
        return {
            "version": STORE_FORMAT,
            "model_version": self.model_version,
            "threshold": self.threshold,
            "count": len(self._entries),
            "checksum": checksum,
            "segments": [f"seg-{checksum[:16]}.kpss"],
        }

    def save(self, directory: str) -> str:
        """Writes a single compacted segment, then the manifest, then drops stale segments."""
        os.makedirs(directory, exist_ok=True)
        manifest = self.manifest()
        seg_name = manifest["segments"][0]
        seg_path = os.path.join(directory, seg_name)
        tmp = seg_path + ".tmp"
        try:
            with open(tmp, "wb") as f:
                f.write(self.segment_bytes())
            os.replace(tmp, seg_path)
            write_manifest(directory, manifest)
        finally:
            if os.path.exists(tmp):
                os.remove(tmp)
        for name in os.listdir(directory):
            if name.endswith(".kpss") and name != seg_name:
                os.remove(os.path.join(directory, name))
        logger.info("saved %d scores (%s) to %s", len(self), self.model_version, directory)
        return directory

    @classmethod
    def load(cls, directory: str) -> "ScoreStore":
        manifest = read_manifest(directory)
        if manifest.get("version") != STORE_FORMAT:
            raise DataError(f"{directory}: unsupported store format {manifest.get('version')!r}")
        entries: Dict[Pair, Entry] = {}
        for seg in manifest.get("segments", []):
            entries.update(_read_segment(os.path.join(directory, seg)))
        store = cls(manifest["model_version"], manifest["threshold"], entries)
        if len(store) != manifest.get("count") or store.checksum != manifest.get("checksum"):
            raise DataError(f"{directory}: store contents do not match the manifest checksum")
        return store


def _read_segment(path: str) -> Dict[Pair, Entry]:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise DataError(f"missing segment {path}: {e}") from e
    if len(data) < HEADER.size:
        raise DataError(f"{path}: truncated segment header")
    magic, version, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC or version != STORE_FORMAT:
        raise DataError(f"{path}: not a score segment (magic={magic!r}, version={version})")
    if len(data) != HEADER.size + count * RECORD.size:
        raise DataError(f"{path}: expected {count} records, file size is {len(data)} bytes")
    out: Dict[Pair, Entry] = {}
    for i, k, score, passed, ts in RECORD.iter_unpack(data[HEADER.size:]):
        out[(i, k)] = (score, bool(passed), ts)
    return out
