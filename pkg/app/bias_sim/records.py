from __future__ import annotations

from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

Pair = Tuple[int, int]


class ClickLogRecord(BaseModel):
    """Exists only for Search-passing pairs that won at least one auction."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    item_id: int
    keyphrase_id: int
    impressions: int = Field(ge=0)
    clicks: int = Field(ge=0)
    sales: int = Field(ge=0)

    @model_validator(mode="after")
    def _conservation(self) -> "ClickLogRecord":
        if self.clicks > self.impressions or self.sales > self.clicks:
            raise ValueError("need sales <= clicks <= impressions")
        return self

    @property
    def pair(self) -> Pair:
        return (self.item_id, self.keyphrase_id)

    @property
    def ctr(self) -> float:
        return self.clicks / self.impressions if self.impressions else 0.0


class RelevanceJudgment(BaseModel):
    """Search pass(1)/fail(0) for one pair; the alignment target, not ground truth."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    item_id: int
    keyphrase_id: int
    label: int = Field(ge=0, le=1)

    @property
    def pair(self) -> Pair:
        return (self.item_id, self.keyphrase_id)
