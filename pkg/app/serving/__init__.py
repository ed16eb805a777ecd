from app.serving.batch import DiffResult, batch_score_diff, batch_score_full, score_records
from app.serving.bench import BenchReport, bench_throughput
from app.serving.nrt import (
    CatalogEvent,
    CategoryEnrichment,
    NrtProcessor,
    NrtService,
    WindowResult,
    nrt_handle,
    parse_events,
)
from app.serving.pairs import ExplicitPairs, SameCategoryPairs, same_category_pairs
from app.serving.store import ScoreRecord, ScoreStore

__all__ = [
    "DiffResult", "batch_score_diff", "batch_score_full", "score_records",
    "BenchReport", "bench_throughput",
    "CatalogEvent", "CategoryEnrichment", "NrtProcessor", "NrtService", "WindowResult", "nrt_handle", "parse_events",
    "ExplicitPairs", "SameCategoryPairs", "same_category_pairs", "ScoreRecord", "ScoreStore",
]
