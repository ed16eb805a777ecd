from __future__ import annotations

import re
from functools import lru_cache
from typing import List, Tuple

# Unicode word runs; underscore counts as punctuation.
_TOKEN_RX = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> List[str]:
    """
    Lowercase and split on Unicode whitespace/punctuation. Duplicates are kept,
    empty tokens dropped. tokenize(" ".join(tokenize(x))) == tokenize(x).
    """
    return list(_tokenize_cached(text or ""))


@lru_cache(maxsize=131072)
def _tokenize_cached(text: str) -> Tuple[str, ...]:
    return tuple(_TOKEN_RX.findall(text.lower()))

