from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from app.errors import DataError
from app.text_core.tokenizer import tokenize

T = TypeVar("T", bound=BaseModel)


class ItemDoc(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    item_id: int
    title: str
    category_id: int
    category_name: str
    updated_at: int = 0

    @field_validator("title")
    @classmethod
    def _title_has_tokens(cls, v: str) -> str:
        if not tokenize(v):
            raise ValueError("title must yield at least one token")
        return v

    @field_validator("category_name")
    @classmethod
    def _non_empty(cls, v: str) -> str:
        if not (v or "").strip():
            raise ValueError("must be non-empty")
        return v


class Keyphrase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    keyphrase_id: int
    text: str
    category_id: Optional[int] = None  # None pairs with every category
    updated_at: int = 0

    @field_validator("text")
    @classmethod
    def _has_tokens(cls, v: str) -> str:
        if not tokenize(v):
            raise ValueError("keyphrase text must yield at least one token")
        return v


# -----------------------------
# Line-delimited JSON
# -----------------------------
def read_jsonl(path: Union[str, Path], model: Type[T]) -> List[T]:
    out: List[T] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                out.append(model.model_validate(json.loads(line)))
            except (json.JSONDecodeError, ValidationError) as e:
                raise DataError(f"{path}:{lineno}: invalid {model.__name__} record: {e}") from e
    return out


def write_jsonl(path: Union[str, Path], records: Iterable[BaseModel]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(r.model_dump_json())
            f.write("\n")


def iter_jsonl_dicts(path: Union[str, Path]) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: invalid JSON: {e}") from e


# -----------------------------
# Catalog
# -----------------------------
class Catalog:
    """Items and keyphrases keyed by id; ids unique within each side."""

    def __init__(self, items: Iterable[ItemDoc] = (), keyphrases: Iterable[Keyphrase] = ()) -> None:
        self.items: Dict[int, ItemDoc] = {}
        self.keyphrases: Dict[int, Keyphrase] = {}
        for it in items:
            if it.item_id in self.items:
                raise DataError(f"duplicate item_id {it.item_id}")
            self.items[it.item_id] = it
        for kp in keyphrases:
            if kp.keyphrase_id in self.keyphrases:
                raise DataError(f"duplicate keyphrase_id {kp.keyphrase_id}")
            self.keyphrases[kp.keyphrase_id] = kp

    def item(self, item_id: int) -> ItemDoc:
        try:
            return self.items[item_id]
        except KeyError:
            raise DataError(f"unknown item_id {item_id}") from None

    def keyphrase(self, keyphrase_id: int) -> Keyphrase:
        try:
            return self.keyphrases[keyphrase_id]
        except KeyError:
            raise DataError(f"unknown keyphrase_id {keyphrase_id}") from None

    def copy(self) -> "Catalog":
        return Catalog(self.items.values(), self.keyphrases.values())

    def upsert_item(self, item: ItemDoc) -> None:
        self.items[item.item_id] = item

    def upsert_keyphrase(self, kp: Keyphrase) -> None:
        self.keyphrases[kp.keyphrase_id] = kp

    def texts(self) -> Iterator[str]:
        for it in self.items.values():
            yield it.title
            yield it.category_name
        for kp in self.keyphrases.values():
            yield kp.text

    def save(self, directory: Union[str, Path]) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_jsonl(d / "items.jsonl", sorted(self.items.values(), key=lambda x: x.item_id))
        write_jsonl(d / "keyphrases.jsonl", sorted(self.keyphrases.values(), key=lambda x: x.keyphrase_id))

    @classmethod
    def load(cls, directory: Union[str, Path], *, items_file: str = "items.jsonl",
             keyphrases_file: str = "keyphrases.jsonl") -> "Catalog":
        d = Path(directory)
        return cls(read_jsonl(d / items_file, ItemDoc), read_jsonl(d / keyphrases_file, Keyphrase))

    def __len__(self) -> int:
        return len(self.items) + len(self.keyphrases)
