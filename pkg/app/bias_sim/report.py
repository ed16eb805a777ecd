from __future__ import annotations

from typing import Dict, List, Mapping, Optional, Sequence

from pydantic import BaseModel

from app.bias_sim.records import ClickLogRecord, Pair
from app.bias_sim.traffic import TrafficLog
from app.bias_sim.world import World


class BiasReport(BaseModel):
    click_pairs: int
    oracle_fail_fraction: float
    irrelevant_coverage: float
    rank_ctr: List[float]
    mnar_relevant_unclicked: int
    relevant_missing_from_clicks: int


class AgreementQuadrants(BaseModel):
    both_pass: int = 0
    advertising_only: int = 0
    search_only: int = 0
    both_fail: int = 0


def measure_middleman_bias(
    click_dataset: Sequence[ClickLogRecord],
    world: World,
    log: Optional[TrafficLog] = None,
    advertised: Optional[Sequence[Pair]] = None,
) -> BiasReport:
    """
    What the click dataset cannot see. Oracle-fail fraction and coverage of the
    Search-irrelevant region are zero by construction; the rank-CTR curve shows
    position bias; the MNAR counts are ground-truth-relevant pairs that never
    earned a click.
    """
    clicked = {r.pair for r in click_dataset}
    fails = sum(1 for i, k in clicked if world.oracle.label(i, k) == 0)
    fail_fraction = fails / len(clicked) if clicked else 0.0

    coverage = 0.0
    mnar = 0
    missing = 0
    if advertised is not None:
        adv = sorted(set(advertised))
        irrelevant = [p for p in adv if world.oracle.label(*p) == 0]
        coverage = (sum(1 for p in irrelevant if p in clicked) / len(irrelevant)) if irrelevant else 0.0
        logged: Dict[Pair, ClickLogRecord] = log.by_pair() if log is not None else {}
        for p in adv:
            if not world.truth.relevant(*p):
                continue
            if p not in clicked:
                missing += 1
            if world.oracle.label(*p) == 1 and (p not in logged or logged[p].clicks == 0):
                mnar += 1

    return BiasReport(
        click_pairs=len(clicked),
        oracle_fail_fraction=fail_fraction,
        irrelevant_coverage=coverage,
        rank_ctr=log.rank_ctr() if log is not None else [],
        mnar_relevant_unclicked=mnar,
        relevant_missing_from_clicks=missing,
    )


def agreement_quadrants(adv_pass: Mapping[Pair, bool], world: World) -> AgreementQuadrants:
    q = AgreementQuadrants()
    for (item_id, kp_id), passed in sorted(adv_pass.items()):
        search = world.oracle.label(item_id, kp_id) == 1
        if passed and search:
            q.both_pass += 1
        elif passed:
            q.advertising_only += 1
        elif search:
            q.search_only += 1
        else:
            q.both_fail += 1
    return q
