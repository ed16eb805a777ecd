from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from app.encoders.params import ParamSet
from app.errors import DataError
from app.text_core.vocab import Vocab

CHECKPOINT_VERSION = 1
_META_KEY = "__meta__"
_PARAM_PREFIX = "p::"


def params_fingerprint(family: str, params: ParamSet, extra: Optional[Dict[str, Any]] = None) -> str:
    """Short content hash used as model_version."""
    h = hashlib.sha256()
    h.update(family.encode("utf-8"))
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype=np.float64)
        h.update(name.encode("utf-8"))
        h.update(str(arr.shape).encode("utf-8"))
        h.update(arr.tobytes())
    if extra:
        h.update(json.dumps(extra, sort_keys=True).encode("utf-8"))
    return f"{family}-{h.hexdigest()[:12]}"


def save_checkpoint(path: Union[str, Path], params: ParamSet, meta: Dict[str, Any]) -> None:
    """
    One .npz file: parameter arrays plus a JSON metadata entry
    (family, objective/preset, dims, vocab hash, threshold, config).
    """
    meta = dict(meta)
    meta.setdefault("checkpoint_version", CHECKPOINT_VERSION)
    arrays = {f"{_PARAM_PREFIX}{k}": np.asarray(v) for k, v in params.items()}
    arrays[_META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def load_checkpoint(path: Union[str, Path], vocab: Optional[Vocab] = None) -> Tuple[Dict[str, Any], ParamSet]:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data[_META_KEY]))
            params = {k[len(_PARAM_PREFIX):]: np.array(data[k]) for k in data.files if k.startswith(_PARAM_PREFIX)}
    except (OSError, KeyError, ValueError) as e:
        raise DataError(f"could not read checkpoint {path}: {e}") from e

    if vocab is not None and meta.get("vocab_hash") != vocab.fingerprint():
        raise DataError(
            f"checkpoint {path} was trained with a different vocabulary "
            f"(checkpoint={meta.get('vocab_hash')}, given={vocab.fingerprint()})"
        )
    return meta, params
