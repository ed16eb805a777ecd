from app.text_core.catalog import Catalog, ItemDoc, Keyphrase, read_jsonl, write_jsonl
from app.text_core.sequences import (
    DEFAULT_MAX_LEN,
    TokenSeq,
    encode_bi_item,
    encode_cross_pair,
    encode_keyphrase,
)
from app.text_core.tokenizer import tokenize
from app.text_core.vocab import CLS, PAD, SEP, SPECIAL_TOKENS, UNK, Vocab, build_vocab

__all__ = [
    "Catalog", "ItemDoc", "Keyphrase", "read_jsonl", "write_jsonl",
    "DEFAULT_MAX_LEN", "TokenSeq", "encode_bi_item", "encode_cross_pair", "encode_keyphrase",
    "tokenize", "CLS", "PAD", "SEP", "SPECIAL_TOKENS", "UNK", "Vocab", "build_vocab",
]
