from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

from app.errors import ConfigError, DataError
from app.text_core.tokenizer import tokenize

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")


class Vocab:
    """
    Immutable token <-> id map. Special tokens hold ids 0..3, the rest are
    dense in [4, |V|).
    """

    def __init__(self, tokens: Sequence[str]) -> None:
        tokens = tuple(tokens)
        if tokens[: len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise DataError("vocab must start with the special tokens [PAD] [UNK] [CLS] [SEP]")
        index: Dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if tok in index:
                raise DataError(f"duplicate vocab token: {tok!r}")
            index[tok] = i
        self._tokens = tokens
        self._index = index

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    @property
    def tokens(self) -> tuple:
        return self._tokens

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK)

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def ids(self, tokens: Iterable[str]) -> List[int]:
        get = self._index.get
        return [get(t, UNK) for t in tokens]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for tok in self._tokens:
            h.update(tok.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()

    def to_json(self) -> Dict[str, object]:
        return {"tokens": list(self._tokens), "fingerprint": self.fingerprint()}

    @classmethod
    def from_json(cls, data: Dict[str, object]) -> "Vocab":
        vocab = cls(data["tokens"])  # type: ignore[arg-type]
        expected = data.get("fingerprint")
        if expected and expected != vocab.fingerprint():
            raise DataError("vocab fingerprint does not match its token list")
        return vocab

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocab":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocab(corpus: Iterable[str], min_freq: int = 1) -> Vocab:
    """Frequency-desc, then lexicographic order after the 4 special tokens."""
    if min_freq < 1:
        raise ConfigError(f"min_freq must be >= 1, got {min_freq}")
    counts: Counter = Counter()
    for text in corpus:
        counts.update(tokenize(text))
    kept = [(tok, n) for tok, n in counts.items() if n >= min_freq]
    kept.sort(key=lambda x: (-x[1], x[0]))
    return Vocab(list(SPECIAL_TOKENS) + [tok for tok, _ in kept])
