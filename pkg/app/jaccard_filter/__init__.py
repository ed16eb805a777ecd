from app.jaccard_filter.jaccard import (
    JaccardConfig,
    JaccardDecision,
    item_token_set,
    jaccard_filter,
    jaccard_index,
)

__all__ = ["JaccardConfig", "JaccardDecision", "item_token_set", "jaccard_filter", "jaccard_index"]
