"""Candidate pair sources. Retrieval is upstream; these stand in for it."""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Protocol, Sequence

from app.scoring.base import Pair
from app.text_core.catalog import Catalog


class PairSource(Protocol):
    def all_pairs(self, catalog: Catalog) -> List[Pair]: ...

    def pairs_touching(self, catalog: Catalog, item_ids: Iterable[int], keyphrase_ids: Iterable[int]) -> List[Pair]: ...


class SameCategoryPairs:
    """Every item with every keyphrase of its category; keyphrases without a category pair with all items."""

    def _by_category(self, catalog: Catalog) -> Dict[Optional[int], List[int]]:
        out: Dict[Optional[int], List[int]] = {}
        for kp_id in sorted(catalog.keyphrases):
            out.setdefault(catalog.keyphrases[kp_id].category_id, []).append(kp_id)
        return out

    def _item_pairs(self, catalog: Catalog, item_id: int, by_cat: Dict[Optional[int], List[int]]) -> List[Pair]:
        cat = catalog.items[item_id].category_id
        kps = sorted(by_cat.get(cat, []) + by_cat.get(None, []))
        return [(item_id, k) for k in kps]

    def _kp_pairs(self, catalog: Catalog, kp_id: int) -> List[Pair]:
        cat = catalog.keyphrases[kp_id].category_id
        return [(i, kp_id) for i in sorted(catalog.items) if cat is None or catalog.items[i].category_id == cat]

    def all_pairs(self, catalog: Catalog) -> List[Pair]:
        by_cat = self._by_category(catalog)
        out: List[Pair] = []
        for item_id in sorted(catalog.items):
            out.extend(self._item_pairs(catalog, item_id, by_cat))
        return out

    def pairs_touching(self, catalog: Catalog, item_ids: Iterable[int], keyphrase_ids: Iterable[int]) -> List[Pair]:
        by_cat = self._by_category(catalog)
        out = set()
        for item_id in item_ids:
            if item_id in catalog.items:
                out.update(self._item_pairs(catalog, item_id, by_cat))
        for kp_id in keyphrase_ids:
            if kp_id in catalog.keyphrases:
                out.update(self._kp_pairs(catalog, kp_id))
        return sorted(out)


class ExplicitPairs:
    """A fixed candidate list, restricted to ids present in the catalog."""

    def __init__(self, pairs: Sequence[Pair]) -> None:
        self.pairs = sorted(set(pairs))

    def all_pairs(self, catalog: Catalog) -> List[Pair]:
        return [p for p in self.pairs if p[0] in catalog.items and p[1] in catalog.keyphrases]

    def pairs_touching(self, catalog: Catalog, item_ids: Iterable[int], keyphrase_ids: Iterable[int]) -> List[Pair]:
        items, kps = set(item_ids), set(keyphrase_ids)
        return [p for p in self.all_pairs(catalog) if p[0] in items or p[1] in kps]


def same_category_pairs(catalog: Catalog) -> List[Pair]:
    return SameCategoryPairs().all_pairs(catalog)
