from __future__ import annotations

from typing import Tuple

from app.text_core.catalog import ItemDoc, Keyphrase
from app.text_core.tokenizer import tokenize
from app.text_core.vocab import CLS, SEP, Vocab

# Ordered ids, length <= max_len, every id < |V|.
TokenSeq = Tuple[int, ...]

DEFAULT_MAX_LEN = 64


def _truncate(ids: list, max_len: int) -> TokenSeq:
    return tuple(ids[:max_len])


def encode_bi_item(item: ItemDoc, vocab: Vocab, max_len: int = DEFAULT_MAX_LEN) -> TokenSeq:
    """title [SEP] category name"""
    ids = vocab.ids(tokenize(item.title))
    ids.append(SEP)
    ids.extend(vocab.ids(tokenize(item.category_name)))
    return _truncate(ids, max_len)


def encode_keyphrase(kp: Keyphrase, vocab: Vocab, max_len: int = DEFAULT_MAX_LEN) -> TokenSeq:
    return _truncate(vocab.ids(tokenize(kp.text)), max_len)


def encode_cross_pair(kp: Keyphrase, item: ItemDoc, vocab: Vocab, max_len: int = DEFAULT_MAX_LEN) -> TokenSeq:
    """[CLS] keyphrase [SEP] category name [SEP] title"""
    ids = [CLS]
    ids.extend(vocab.ids(tokenize(kp.text)))
    ids.append(SEP)
    ids.extend(vocab.ids(tokenize(item.category_name)))
    ids.append(SEP)
    ids.extend(vocab.ids(tokenize(item.title)))
    return _truncate(ids, max_len)
